#pragma once

#include <vector>

#include "oipp/kernel.hpp"
#include "oipp/types.hpp"

namespace oipp {

/// Read-only view of a GP posterior over the 2-D domain.
class Posterior {
 public:
  virtual ~Posterior() = default;
  [[nodiscard]] virtual std::vector<PosteriorPrediction> predict(const PointSet& query) const = 0;
  [[nodiscard]] virtual const Hyperparameters& hyper() const = 0;
};

/// Zero-mean GP prior: every query returns (0, signal variance).
class PriorPosterior final : public Posterior {
 public:
  explicit PriorPosterior(Hyperparameters hyper) : hyper_(hyper) {}
  [[nodiscard]] std::vector<PosteriorPrediction> predict(const PointSet& query) const override {
    return std::vector<PosteriorPrediction>(static_cast<std::size_t>(query.rows()),
                                            PosteriorPrediction{0.0, hyper_.signal_variance()});
  }
  [[nodiscard]] const Hyperparameters& hyper() const override { return hyper_; }

 private:
  Hyperparameters hyper_;
};

}  // namespace oipp
