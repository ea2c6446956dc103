#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "oipp/gp_sparse.hpp"
#include "oipp/kernel.hpp"
#include "oipp/optimizer.hpp"
#include "oipp/posterior.hpp"
#include "oipp/types.hpp"

namespace oipp {

struct StreamingConfig {
  /// Inducing count after an update is ceil(fraction * total_observed), capped.
  double inducing_fraction = 0.15;
  std::size_t inducing_cap = 500;
  /// Batches larger than this are consumed in cyclic minibatches.
  std::size_t minibatch = 64;
  OptimizerConfig optimizer = default_optimizer();

  static OptimizerConfig default_optimizer() {
    OptimizerConfig c;
    c.max_iterations = 50;
    c.initial_step = 1e-2;
    c.relative_tolerance = 1e-6;
    c.max_move = 1.0;
    c.barzilai_borwein = true;
    return c;
  }
};

struct StreamingUpdateEvent {
  bool skipped = false;
  std::size_t batch_size = 0;
  std::size_t inducing = 0;
  int iterations = 0;
  bool warning = false;
  double elbo = 0.0;
  std::string message;
};

/// Streaming sparse GP posterior. Holds only the current sparse posterior,
/// the posterior it replaced and a count of consumed measurements; raw
/// measurements are never stored.
class StreamingGPState final : public Posterior {
 public:
  /// Fresh state: GP prior with the given hyperparameters.
  explicit StreamingGPState(const Hyperparameters& prior_hyper) : hyper_(prior_hyper) {}

  [[nodiscard]] const std::optional<SparseGPState>& current() const { return current_; }
  [[nodiscard]] const std::optional<SparseGPState>& previous() const { return previous_; }
  [[nodiscard]] std::size_t total_observed() const { return total_observed_; }
  [[nodiscard]] std::size_t inducing_count() const {
    return current_ ? current_->inducing_count() : 0;
  }
  /// Raw measurements kept by the state. Always zero.
  [[nodiscard]] std::size_t retained_measurements() const { return 0; }
  [[nodiscard]] const StreamingUpdateEvent& last_update() const { return last_update_; }

  [[nodiscard]] const Hyperparameters& hyper() const override {
    return current_ ? current_->hyper() : hyper_;
  }
  [[nodiscard]] std::vector<PosteriorPrediction> predict(const PointSet& query) const override;

 private:
  friend StreamingGPState ssgp_update(const StreamingGPState&, const DataBatch&,
                                      const StreamingConfig&);
  friend StreamingGPState restore_streaming_state(const Hyperparameters&,
                                                  std::optional<SparseGPState>,
                                                  std::optional<SparseGPState>, std::size_t);

  Hyperparameters hyper_;
  std::optional<SparseGPState> current_;
  std::optional<SparseGPState> previous_;
  std::size_t total_observed_ = 0;
  StreamingUpdateEvent last_update_;
};

struct OnlineElboTerms {
  double expected_log_likelihood = 0.0;
  double kl_prior = 0.0;            // KL[q(u) || p(u)]
  double kl_old_prior = 0.0;        // KL[q(u') || p(u')], old hyperparameters
  double kl_old_posterior = 0.0;    // KL[q(u') || q'(u')]
  double total = 0.0;
};

/// Online bound for absorbing `new_batch` into `candidate` given the
/// previous posterior `previous` (nullptr before the first update, in which
/// case the bound reduces to the plain uncollapsed bound).
double online_elbo(const DataBatch& new_batch, const SparseGPState& candidate,
                   const SparseGPState* previous);

/// The four terms of online_elbo, each evaluated as an explicit Gaussian
/// expectation or KL divergence.
OnlineElboTerms online_elbo_terms(const DataBatch& new_batch, const SparseGPState& candidate,
                                  const SparseGPState* previous);

/// online_elbo with its analytic gradient over (log hyper, q mean, chol(q cov)).
BoundEvaluation online_elbo_gradient(const DataBatch& new_batch, const SparseGPState& candidate,
                                     const SparseGPState* previous);

/// Inducing count implied by the growth rule.
std::size_t target_inducing_count(std::size_t total_observed, const StreamingConfig& config);

/// Absorbs one batch: regrows Z by pivoted Cholesky over (old Z, batch
/// inputs), refits hyperparameters and q(u) on the online bound, and moves
/// the replaced posterior into the snapshot slot. On numerical failure the
/// previous posterior is kept and the event is marked skipped.
StreamingGPState ssgp_update(const StreamingGPState& state, const DataBatch& new_batch,
                             const StreamingConfig& config = {});

std::vector<PosteriorPrediction> predict_streaming(const StreamingGPState& state,
                                                   const PointSet& query);

/// Rebuilds a state from checkpointed parts.
StreamingGPState restore_streaming_state(const Hyperparameters& prior_hyper,
                                         std::optional<SparseGPState> current,
                                         std::optional<SparseGPState> previous,
                                         std::size_t total_observed);

}  // namespace oipp

#include <iosfwd>

namespace oipp {

/// Text checkpoint of a streaming state (values printed with 17 significant
/// digits so a reload reproduces every double exactly):
///
///   SSGP v1
///   prior_hyper <log l> <log sf2> <log noise>
///   total_observed <n>
///   current 0|1      followed by a sparse block when 1
///   previous 0|1     followed by a sparse block when 1
///
/// sparse block: `hyper <3 logs>`, `inducing <m>`, m lines `x y`,
/// `mean` then one line of m values, `cov` then m lines of m values.
void write_checkpoint(std::ostream& out, const StreamingGPState& state);
/// Throws InputError naming the offending line on malformed input.
StreamingGPState read_checkpoint(std::istream& in);

}  // namespace oipp
