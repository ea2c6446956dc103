#include "oipp/mapper.hpp"

#include <algorithm>
#include <cmath>

namespace oipp {

MapperKind parse_mapper(const std::string& name) {
  if (name == "exact") return MapperKind::exact;
  if (name == "sgpr") return MapperKind::sgpr;
  if (name == "svgp") return MapperKind::svgp;
  if (name == "ssgp") return MapperKind::ssgp;
  throw InputError("unknown mapper '" + name + "' (expected exact, sgpr, svgp or ssgp)");
}

std::string to_string(MapperKind kind) {
  switch (kind) {
    case MapperKind::exact: return "exact";
    case MapperKind::sgpr: return "sgpr";
    case MapperKind::svgp: return "svgp";
    case MapperKind::ssgp: return "ssgp";
  }
  return "unknown";
}

namespace {

OptimizerConfig bounded_optimizer(const MapperConfig& config, const LogBox& box) {
  OptimizerConfig opt = StreamingConfig::default_optimizer();
  opt.max_iterations = config.iterations;
  opt.lower = box.lower;
  opt.upper = box.upper;
  return opt;
}

std::size_t inducing_for(std::size_t n, const MapperConfig& config) {
  const auto m = static_cast<std::size_t>(std::ceil(config.inducing_fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(m, 1, std::min(config.inducing_cap, n));
}

// Common state for mappers that refit on all data seen so far.
class BatchMapper : public Mapper {
 public:
  BatchMapper(const MapperConfig& config, const Hyperparameters& start, const LogBox& box)
      : config_(config), hyper_(start), opt_(bounded_optimizer(config, box)),
        posterior_(std::make_shared<PriorPosterior>(start)) {}

  MapperUpdate update(const DataBatch& batch) override {
    MapperUpdate out;
    out.batch_size = batch.size();
    if (batch.empty()) {
      out.skipped = true;
      out.message = "empty batch";
      out.inducing = inducing_;
      return out;
    }
    const DataBatch all = concat(data_, batch);
    try {
      refit(all);
      data_ = all;
    } catch (const std::exception& e) {
      out.skipped = true;
      out.message = e.what();
    }
    out.inducing = inducing_;
    return out;
  }

  [[nodiscard]] std::shared_ptr<const Posterior> posterior() const override { return posterior_; }
  [[nodiscard]] std::size_t inducing_count() const override { return inducing_; }
  [[nodiscard]] std::size_t retained_measurements() const override { return data_.size(); }

 protected:
  virtual void refit(const DataBatch& all) = 0;

  MapperConfig config_;
  Hyperparameters hyper_;
  OptimizerConfig opt_;
  std::shared_ptr<const Posterior> posterior_;
  DataBatch data_;
  std::size_t inducing_ = 0;
};

class ExactMapper final : public BatchMapper {
 public:
  using BatchMapper::BatchMapper;
  [[nodiscard]] MapperKind kind() const override { return MapperKind::exact; }

 private:
  void refit(const DataBatch& all) override {
    if (all.size() < 2) {
      posterior_ = std::make_shared<ExactGPState>(all, hyper_);
      return;
    }
    auto fit = fit_exact(all, hyper_, opt_);
    hyper_ = fit.state.hyper();
    posterior_ = std::make_shared<ExactGPState>(std::move(fit.state));
  }
};

class SgprMapper final : public BatchMapper {
 public:
  using BatchMapper::BatchMapper;
  [[nodiscard]] MapperKind kind() const override { return MapperKind::sgpr; }

 private:
  void refit(const DataBatch& all) override {
    auto fit = fit_sgpr(all, inducing_for(all.size(), config_), hyper_, opt_);
    hyper_ = fit.state.hyper();
    inducing_ = fit.state.inducing_count();
    posterior_ = std::make_shared<SparseGPState>(std::move(fit.state));
  }
};

class SvgpMapper final : public BatchMapper {
 public:
  SvgpMapper(const MapperConfig& config, const Hyperparameters& start, const LogBox& box, std::uint64_t seed)
      : BatchMapper(config, start, box), seed_(seed) {}
  [[nodiscard]] MapperKind kind() const override { return MapperKind::svgp; }

 private:
  void refit(const DataBatch& all) override {
    const std::size_t m = inducing_for(all.size(), config_);
    const PointSet z = gather_rows(all.inputs, pivoted_cholesky_select(all.inputs, m, hyper_));
    // Adam starts from the optimal q(u) for the current hyperparameters.
    const SparseGPState start(z, sgpr_optimal_variational(all, z, hyper_), hyper_);
    SvgpTrainConfig cfg;
    cfg.minibatch = config_.minibatch;
    cfg.steps = config_.iterations;
    cfg.learning_rate = config_.svgp_learning_rate;
    auto state = train_svgp(all, start, cfg, seed_ + step_++);
    hyper_ = state.hyper();
    inducing_ = state.inducing_count();
    posterior_ = std::make_shared<SparseGPState>(std::move(state));
  }

  std::uint64_t seed_;
  std::uint64_t step_ = 0;
};

class SsgpMapper final : public Mapper {
 public:
  SsgpMapper(const MapperConfig& config, const Hyperparameters& start, const LogBox& box) : state_(start) {
    config_.inducing_fraction = config.inducing_fraction;
    config_.inducing_cap = config.inducing_cap;
    config_.minibatch = config.minibatch;
    config_.optimizer = bounded_optimizer(config, box);
    posterior_ = std::make_shared<StreamingGPState>(state_);
  }
  [[nodiscard]] MapperKind kind() const override { return MapperKind::ssgp; }

  MapperUpdate update(const DataBatch& batch) override {
    MapperUpdate out;
    out.batch_size = batch.size();
    if (batch.empty()) {
      out.skipped = true;
      out.message = "empty batch";
    } else {
      state_ = ssgp_update(state_, batch, config_);
      out.skipped = state_.last_update().skipped;
      out.message = state_.last_update().message;
      out.iterations = state_.last_update().iterations;
      if (!out.skipped) posterior_ = std::make_shared<StreamingGPState>(state_);
    }
    out.inducing = state_.inducing_count();
    return out;
  }

  [[nodiscard]] std::shared_ptr<const Posterior> posterior() const override { return posterior_; }
  [[nodiscard]] std::size_t inducing_count() const override { return state_.inducing_count(); }
  [[nodiscard]] std::size_t retained_measurements() const override { return state_.retained_measurements(); }
  [[nodiscard]] const StreamingGPState& state() const { return state_; }

 private:
  StreamingConfig config_;
  StreamingGPState state_;
  std::shared_ptr<const Posterior> posterior_;
};

}  // namespace

std::unique_ptr<Mapper> make_mapper(MapperKind kind, const MapperConfig& config, double domain_diagonal,
                                    double signal, std::uint64_t seed) {
  if (config.iterations < 0 || !(config.inducing_fraction > 0.0) || config.inducing_cap < 1 || config.minibatch < 1) {
    throw InputError("invalid mapper configuration");
  }
  const LogBox box = hyperparameter_box(domain_diagonal, signal);
  const Hyperparameters start = Hyperparameters::from_natural(0.1 * domain_diagonal, signal, 0.01 * signal);
  switch (kind) {
    case MapperKind::exact: return std::make_unique<ExactMapper>(config, start, box);
    case MapperKind::sgpr: return std::make_unique<SgprMapper>(config, start, box);
    case MapperKind::svgp: return std::make_unique<SvgpMapper>(config, start, box, seed);
    case MapperKind::ssgp: return std::make_unique<SsgpMapper>(config, start, box);
  }
  throw InputError("unknown mapper kind");
}

}  // namespace oipp
