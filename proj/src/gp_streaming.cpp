#include "oipp/gp_streaming.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

namespace oipp {

std::vector<PosteriorPrediction> StreamingGPState::predict(const PointSet& query) const {
  if (current_) return current_->predict(query);
  return PriorPosterior(hyper_).predict(query);
}

std::vector<PosteriorPrediction> predict_streaming(const StreamingGPState& state,
                                                   const PointSet& query) {
  return state.predict(query);
}

namespace {

std::optional<OldPosteriorTerms> old_terms_of(const SparseGPState* previous) {
  if (previous == nullptr) return std::nullopt;
  return prepare_old_terms(previous->inducing(), previous->variational(), previous->hyper());
}

}  // namespace

double online_elbo(const DataBatch& new_batch, const SparseGPState& candidate,
                   const SparseGPState* previous) {
  const auto old = old_terms_of(previous);
  const BoundProblem problem{&new_batch, &candidate.inducing(), 1.0, old ? &*old : nullptr};
  return evaluate_bound(problem, candidate.hyper(), candidate.variational().mean,
                        covariance_factor(candidate.variational().cov), false)
      .value;
}

BoundEvaluation online_elbo_gradient(const DataBatch& new_batch, const SparseGPState& candidate,
                                     const SparseGPState* previous) {
  const auto old = old_terms_of(previous);
  const BoundProblem problem{&new_batch, &candidate.inducing(), 1.0, old ? &*old : nullptr};
  return evaluate_bound(problem, candidate.hyper(), candidate.variational().mean,
                        covariance_factor(candidate.variational().cov), true);
}

OnlineElboTerms online_elbo_terms(const DataBatch& new_batch, const SparseGPState& candidate,
                                  const SparseGPState* previous) {
  OnlineElboTerms t;
  const auto& hyper = candidate.hyper();
  const auto& q = candidate.variational();
  const Eigen::Index m = q.mean.size();

  if (!new_batch.empty()) {
    const auto marg = candidate.predict(new_batch.inputs);
    const double noise = hyper.noise_variance();
    for (Eigen::Index i = 0; i < new_batch.targets.size(); ++i) {
      const auto& p = marg[static_cast<std::size_t>(i)];
      const double r = new_batch.targets(i) - p.mean;
      t.expected_log_likelihood +=
          -0.5 * std::log(2.0 * std::numbers::pi * noise) - 0.5 * (r * r + p.variance) / noise;
    }
  }
  const Eigen::MatrixXd k_uu = cholesky_psd(rbf_kernel(candidate.inducing(), candidate.inducing(), hyper))
                                   .lower;
  t.kl_prior = gaussian_kl(q.mean, q.cov, Eigen::VectorXd::Zero(m), k_uu * k_uu.transpose());

  if (previous != nullptr) {
    const auto qa = candidate.joint(previous->inducing());
    const Eigen::MatrixXd k_old =
        cholesky_psd(rbf_kernel(previous->inducing(), previous->inducing(), previous->hyper())).lower;
    t.kl_old_prior = gaussian_kl(qa.mean, qa.cov, Eigen::VectorXd::Zero(qa.mean.size()),
                                 k_old * k_old.transpose());
    t.kl_old_posterior =
        gaussian_kl(qa.mean, qa.cov, previous->variational().mean, previous->variational().cov);
  }
  t.total = t.expected_log_likelihood - t.kl_prior + t.kl_old_prior - t.kl_old_posterior;
  return t;
}

std::size_t target_inducing_count(std::size_t total_observed, const StreamingConfig& config) {
  const auto grown = static_cast<std::size_t>(
      std::ceil(config.inducing_fraction * static_cast<double>(total_observed) - 1e-9));
  return std::max<std::size_t>(1, std::min(grown, config.inducing_cap));
}

namespace {

struct ThetaFit {
  Hyperparameters hyper;
  int iterations = 0;
  bool warning = false;
  double value = 0.0;
};

ThetaFit fit_hyperparameters(const DataBatch& batch, const PointSet& z, const OldPosteriorTerms* old,
                             const Hyperparameters& start, const StreamingConfig& config) {
  auto make_objective = [&](const BoundProblem& problem) {
    return [problem](const Eigen::VectorXd& p) {
      const auto pb = profiled_bound(problem, Hyperparameters::from_log(p), true);
      return Objective{pb.value, pb.grad_hyper};
    };
  };
  auto make_value = [&](const BoundProblem& problem) {
    return [problem](const Eigen::VectorXd& p) {
      return profiled_bound(problem, Hyperparameters::from_log(p), false).value;
    };
  };

  if (batch.size() <= config.minibatch) {
    const BoundProblem problem{&batch, &z, 1.0, old};
    const auto r = maximize(make_objective(problem), make_value(problem), start.log_params(),
                            config.optimizer);
    return {Hyperparameters::from_log(r.x), r.iterations, r.warning, r.value};
  }

  // Cyclic minibatches: one line-searched ascent step per minibatch, with the
  // likelihood rescaled to the full batch size.
  ThetaFit fit{start, 0, false, 0.0};
  OptimizerConfig step_config = config.optimizer;
  step_config.max_iterations = 1;
  step_config.relative_tolerance = 0.0;
  const std::size_t n = batch.size();
  std::size_t cursor = 0;
  for (int it = 0; it < config.optimizer.max_iterations; ++it) {
    const std::size_t len = std::min(config.minibatch, n - cursor);
    DataBatch mb{batch.inputs.middleRows(static_cast<Eigen::Index>(cursor), static_cast<Eigen::Index>(len)),
                 batch.targets.segment(static_cast<Eigen::Index>(cursor), static_cast<Eigen::Index>(len))};
    cursor = (cursor + len) % n;
    const BoundProblem problem{&mb, &z, static_cast<double>(n) / static_cast<double>(len), old};
    const auto r = maximize(make_objective(problem), make_value(problem), fit.hyper.log_params(),
                            step_config);
    fit.hyper = Hyperparameters::from_log(r.x);
    fit.iterations += r.iterations;
    fit.warning = fit.warning || r.warning;
    if (r.converged) break;
  }
  return fit;
}

}  // namespace

StreamingGPState ssgp_update(const StreamingGPState& state, const DataBatch& new_batch,
                             const StreamingConfig& config) {
  if (new_batch.empty()) throw InputError("ssgp_update: empty batch");
  if (new_batch.inputs.rows() != new_batch.targets.size()) {
    throw InputError("ssgp_update: inputs and targets differ in length");
  }

  StreamingGPState next = state;
  next.last_update_ = StreamingUpdateEvent{};
  next.last_update_.batch_size = new_batch.size();

  const std::size_t total_after = state.total_observed_ + new_batch.size();
  PointSet candidates;
  if (state.current_) {
    const auto& old_z = state.current_->inducing();
    candidates.resize(old_z.rows() + new_batch.inputs.rows(), 2);
    candidates << old_z, new_batch.inputs;
  } else {
    candidates = new_batch.inputs;
  }
  const std::size_t m = std::min(target_inducing_count(total_after, config),
                                 static_cast<std::size_t>(candidates.rows()));

  try {
    const Hyperparameters start = state.hyper();
    const PointSet z = gather_rows(candidates, pivoted_cholesky_select(candidates, m, start));
    std::optional<OldPosteriorTerms> old;
    if (state.current_) {
      old = prepare_old_terms(state.current_->inducing(), state.current_->variational(),
                              state.current_->hyper());
    }
    const OldPosteriorTerms* old_ptr = old ? &*old : nullptr;
    const auto fit = fit_hyperparameters(new_batch, z, old_ptr, start, config);
    const BoundProblem full{&new_batch, &z, 1.0, old_ptr};
    auto q = optimal_variational(full, fit.hyper);
    if (!q.mean.allFinite() || !q.cov.allFinite()) throw NumericalError("non-finite variational state");
    SparseGPState updated(z, std::move(q), fit.hyper);

    next.previous_ = state.current_;
    next.current_ = std::move(updated);
    next.total_observed_ = total_after;
    next.last_update_.inducing = m;
    next.last_update_.iterations = fit.iterations;
    next.last_update_.warning = fit.warning;
    next.last_update_.elbo = fit.value;
  } catch (const std::exception& e) {
    next = state;
    next.last_update_ = StreamingUpdateEvent{};
    next.last_update_.skipped = true;
    next.last_update_.batch_size = new_batch.size();
    next.last_update_.inducing = state.inducing_count();
    next.last_update_.message = e.what();
  }
  return next;
}

StreamingGPState restore_streaming_state(const Hyperparameters& prior_hyper,
                                         std::optional<SparseGPState> current,
                                         std::optional<SparseGPState> previous,
                                         std::size_t total_observed) {
  if (current && total_observed < current->inducing_count()) {
    throw InputError("checkpoint: inducing count exceeds total observed");
  }
  StreamingGPState s(prior_hyper);
  s.current_ = std::move(current);
  s.previous_ = std::move(previous);
  s.total_observed_ = total_observed;
  return s;
}

namespace {

void write_sparse(std::ostream& out, const SparseGPState& s) {
  const auto& h = s.hyper().log_params();
  out << "hyper " << h(0) << ' ' << h(1) << ' ' << h(2) << '\n';
  const auto& z = s.inducing();
  out << "inducing " << z.rows() << '\n';
  for (Eigen::Index i = 0; i < z.rows(); ++i) out << z(i, 0) << ' ' << z(i, 1) << '\n';
  out << "mean\n";
  const auto& q = s.variational();
  for (Eigen::Index i = 0; i < q.mean.size(); ++i) out << (i ? " " : "") << q.mean(i);
  out << "\ncov\n";
  for (Eigen::Index i = 0; i < q.cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cov.cols(); ++j) out << (j ? " " : "") << q.cov(i, j);
    out << '\n';
  }
  out << "site " << (q.site ? 1 : 0) << '\n';
  if (!q.site) return;
  for (Eigen::Index i = 0; i < q.site->precision.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.site->precision.cols(); ++j) {
      out << (j ? " " : "") << q.site->precision(i, j);
    }
    out << '\n';
  }
  for (Eigen::Index i = 0; i < q.site->shift.size(); ++i) out << (i ? " " : "") << q.site->shift(i);
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const std::string& expect_key = {}) {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    ++line_no_;
    std::istringstream ss(line);
    if (!expect_key.empty()) {
      std::string key;
      ss >> key;
      if (key != expect_key) fail("expected '" + expect_key + "'");
    }
    return ss;
  }

  template <typename T>
  T read_value(std::istringstream& ss) {
    T v{};
    if (!(ss >> v)) fail("malformed value");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

Eigen::Vector3d read_hyper(LineReader& r, const std::string& key) {
  auto ss = r.next(key);
  Eigen::Vector3d h;
  for (int i = 0; i < 3; ++i) h(i) = r.read_value<double>(ss);
  return h;
}

SparseGPState read_sparse(LineReader& r) {
  const auto hyper = Hyperparameters::from_log(read_hyper(r, "hyper"));
  auto ss = r.next("inducing");
  const auto m = r.read_value<Eigen::Index>(ss);
  if (m < 1) r.fail("inducing count must be positive");
  PointSet z(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto row = r.next();
    z(i, 0) = r.read_value<double>(row);
    z(i, 1) = r.read_value<double>(row);
  }
  r.next("mean");
  VariationalState q;
  q.mean.resize(m);
  auto mean_row = r.next();
  for (Eigen::Index i = 0; i < m; ++i) q.mean(i) = r.read_value<double>(mean_row);
  r.next("cov");
  q.cov.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto row = r.next();
    for (Eigen::Index j = 0; j < m; ++j) q.cov(i, j) = r.read_value<double>(row);
  }
  auto site_row = r.next("site");
  if (r.read_value<int>(site_row) == 1) {
    WhitenedSite site;
    site.precision.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      auto row = r.next();
      for (Eigen::Index j = 0; j < m; ++j) site.precision(i, j) = r.read_value<double>(row);
    }
    site.shift.resize(m);
    auto shift_row = r.next();
    for (Eigen::Index i = 0; i < m; ++i) site.shift(i) = r.read_value<double>(shift_row);
    q.site = std::move(site);
  }
  return SparseGPState(std::move(z), std::move(q), hyper);
}

}  // namespace

void write_checkpoint(std::ostream& out, const StreamingGPState& state) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  const auto& prior = state.current() ? state.current()->hyper() : state.hyper();
  out << "SSGP v1\n";
  const auto& h = prior.log_params();
  out << "prior_hyper " << h(0) << ' ' << h(1) << ' ' << h(2) << '\n';
  out << "total_observed " << state.total_observed() << '\n';
  out << "current " << (state.current() ? 1 : 0) << '\n';
  if (state.current()) write_sparse(out, *state.current());
  out << "previous " << (state.previous() ? 1 : 0) << '\n';
  if (state.previous()) write_sparse(out, *state.previous());
  out.precision(old_precision);
}

StreamingGPState read_checkpoint(std::istream& in) {
  LineReader r(in);
  {
    auto ss = r.next("SSGP");
    if (r.read_value<std::string>(ss) != "v1") r.fail("unsupported checkpoint version");
  }
  const auto prior = Hyperparameters::from_log(read_hyper(r, "prior_hyper"));
  auto ts = r.next("total_observed");
  const auto total = r.read_value<std::size_t>(ts);
  std::optional<SparseGPState> current;
  std::optional<SparseGPState> previous;
  auto cs = r.next("current");
  if (r.read_value<int>(cs) == 1) current = read_sparse(r);
  auto ps = r.next("previous");
  if (r.read_value<int>(ps) == 1) previous = read_sparse(r);
  return restore_streaming_state(prior, std::move(current), std::move(previous), total);
}

}  // namespace oipp
