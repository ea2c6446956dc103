#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "oipp/gp_exact.hpp"
#include "oipp/gp_sparse.hpp"
#include "oipp/gp_streaming.hpp"
#include "oipp/posterior.hpp"

namespace oipp {

enum class MapperKind { exact, sgpr, svgp, ssgp };

MapperKind parse_mapper(const std::string& name);
std::string to_string(MapperKind kind);

struct MapperConfig {
  /// Hyperparameter iterations per update.
  int iterations = 10;
  double inducing_fraction = 0.15;
  std::size_t inducing_cap = 500;
  std::size_t minibatch = 64;
  double svgp_learning_rate = 1e-2;
};

struct MapperUpdate {
  bool skipped = false;
  std::size_t batch_size = 0;
  std::size_t inducing = 0;
  int iterations = 0;
  std::string message;
};

/// Online map estimator consuming measurement batches.
class Mapper {
 public:
  virtual ~Mapper() = default;
  [[nodiscard]] virtual MapperKind kind() const = 0;
  virtual MapperUpdate update(const DataBatch& batch) = 0;
  /// Immutable snapshot of the current posterior.
  [[nodiscard]] virtual std::shared_ptr<const Posterior> posterior() const = 0;
  /// Inducing points in use; zero for the exact mapper.
  [[nodiscard]] virtual std::size_t inducing_count() const = 0;
  /// Raw measurements kept between updates.
  [[nodiscard]] virtual std::size_t retained_measurements() const = 0;
};

/// `domain_diagonal` and `signal` scale the hyperparameter start and box.
std::unique_ptr<Mapper> make_mapper(MapperKind kind, const MapperConfig& config, double domain_diagonal,
                                    double signal, std::uint64_t seed);

}  // namespace oipp
