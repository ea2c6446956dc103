#include "oipp/variational_bound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace oipp {

namespace {

Eigen::MatrixXd identity(Eigen::Index n) { return Eigen::MatrixXd::Identity(n, n); }

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Accumulates sum(G .* dK/dlog_l) and sum(G .* dK/dlog_sf2) for one kernel block.
void add_kernel_block_gradient(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& kernel,
                               const Eigen::MatrixXd& sq_dist, double l2, Eigen::Vector3d& out) {
  const Eigen::ArrayXXd gk = grad.array() * kernel.array();
  out(0) += (gk * sq_dist.array()).sum() / l2;
  out(1) += gk.sum();
}

// X L'^{-T} for X with columns indexed by the old inducing inputs.
Eigen::MatrixXd whiten_columns(const OldPosteriorTerms& old, const Eigen::MatrixXd& x) {
  return old.prior_chol.triangularView<Eigen::Lower>().solve(x.transpose()).transpose();
}

// L'^{-1} X L'^{-T} for symmetric X indexed by the old inducing inputs.
Eigen::MatrixXd whiten_both(const OldPosteriorTerms& old, const Eigen::MatrixXd& x) {
  const auto la = old.prior_chol.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd half = la.solve(x);
  return symmetrized(la.solve(half.transpose()));
}

// Eigenbasis of a symmetric PSD precision with near-null directions removed
// from both the precision and the shift, so the site stays bounded above.
struct CleanSite {
  Eigen::MatrixXd basis;
  Eigen::VectorXd values;
  Eigen::VectorXd shift;
};

CleanSite clean_site(const Eigen::MatrixXd& precision, const Eigen::VectorXd& shift) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(precision));
  if (eig.info() != Eigen::Success) throw NumericalError("eigen decomposition of a site precision failed");
  CleanSite c{eig.eigenvectors(), eig.eigenvalues(), {}};
  const double floor = 1e-12 * std::max(1.0, c.values.maxCoeff());
  c.shift = c.basis.transpose() * shift;
  for (Eigen::Index i = 0; i < c.values.size(); ++i) {
    if (c.values(i) <= floor) {
      c.values(i) = 0.0;
      c.shift(i) = 0.0;
    }
  }
  return c;
}

}  // namespace

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  return cholesky_psd(symmetrized(cov)).lower;
}

double gaussian_kl(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0, const Eigen::VectorXd& m1,
                   const Eigen::MatrixXd& s1) {
  const auto l0 = cholesky_psd(s0);
  const auto l1 = cholesky_psd(s1);
  const double trace = l1.solve_lower(l0.lower).squaredNorm();
  const Eigen::VectorXd diff = m1 - m0;
  const double maha = l1.solve_lower(diff).squaredNorm();
  return 0.5 * (trace + maha - static_cast<double>(m0.size()) + l1.log_determinant() -
                l0.log_determinant());
}

OldPosteriorTerms prepare_old_terms(const PointSet& inducing, const VariationalState& posterior,
                                    const Hyperparameters& hyper) {
  OldPosteriorTerms t;
  t.inducing = inducing;
  t.posterior = posterior;
  t.hyper = hyper;
  t.prior_chol = cholesky_psd(rbf_kernel(inducing, inducing, hyper)).lower;
  const auto la = t.prior_chol.triangularView<Eigen::Lower>();

  WhitenedSite site;
  if (posterior.site && posterior.site->shift.size() == inducing.rows()) {
    site = *posterior.site;
  } else {
    // Whitened covariance Sv = L'^{-1} S' L'^{-T} has eigenvalues in (0, 1].
    const Eigen::MatrixXd half = la.solve(symmetrized(posterior.cov));
    const Eigen::MatrixXd sv = symmetrized(la.solve(half.transpose()));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sv);
    if (eig.info() != Eigen::Success) throw NumericalError("eigen decomposition of the old posterior failed");
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(1e-12).cwiseMin(1.0);
    const Eigen::MatrixXd& v = eig.eigenvectors();
    site.precision = v * (lambda.cwiseInverse().array() - 1.0).matrix().asDiagonal() * v.transpose();
    site.shift = v * (v.transpose() * la.solve(posterior.mean)).cwiseQuotient(lambda);
  }
  const CleanSite clean = clean_site(site.precision, site.shift);
  const Eigen::MatrixXd& u = clean.basis;
  const Eigen::VectorXd& d = clean.values;
  t.precision_gap = symmetrized(u * d.asDiagonal() * u.transpose());
  t.precision_factor = u * d.cwiseSqrt().asDiagonal();
  t.shift = u * clean.shift;
  t.constant = 0.5 * d.array().log1p().sum() -
               0.5 * (clean.shift.array().square() / (1.0 + d.array())).sum();
  return t;
}

namespace {

enum class GradientMode { none, hyper, full };

BoundEvaluation evaluate(const BoundProblem& problem, const Hyperparameters& hyper,
                         const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol, GradientMode mode) {
  if (problem.inducing == nullptr || problem.inducing->rows() == 0) {
    throw InputError("variational bound needs at least one inducing input");
  }
  const PointSet& z = *problem.inducing;
  const Eigen::Index m = z.rows();
  if (mean.size() != m || chol.rows() != m || chol.cols() != m) {
    throw InputError("variational parameters do not match the inducing set");
  }
  const bool has_data = problem.batch != nullptr && !problem.batch->empty();
  const double sf2 = hyper.signal_variance();
  const double l2 = hyper.lengthscale() * hyper.lengthscale();
  const double noise = hyper.noise_variance();
  const double c = 1.0 / noise;
  const double s = problem.likelihood_scale;

  const Eigen::MatrixXd d_bb = squared_distances(z, z);
  const Eigen::MatrixXd k_bb = rbf_from_distances(d_bb, hyper);
  const CholeskyFactor lb = cholesky_psd(k_bb);
  const Eigen::MatrixXd cov = chol * chol.transpose();

  BoundEvaluation out;

  // KL[q(u) || p(u)]
  const Eigen::VectorXd alpha = lb.solve(mean);
  const double trace_term = lb.solve_lower(chol).squaredNorm();
  const double log_det_s = 2.0 * chol.diagonal().array().abs().log().sum();
  out.terms.kl_prior = 0.5 * (trace_term + mean.dot(alpha) - static_cast<double>(m) +
                              lb.log_determinant() - log_det_s);

  Eigen::MatrixXd d_bf, k_bf, w, sw;
  Eigen::VectorXd resid;
  double quad = 0.0;
  double n = 0.0;
  if (has_data) {
    const DataBatch& batch = *problem.batch;
    n = static_cast<double>(batch.size());
    d_bf = squared_distances(z, batch.inputs);
    k_bf = rbf_from_distances(d_bf, hyper);
    w = lb.solve(k_bf);
    resid = batch.targets - w.transpose() * mean;
    sw = cov * w;
    const double trace_q = (k_bf.array() * w.array()).sum();
    const double trace_s = (w.array() * sw.array()).sum();
    quad = resid.squaredNorm() + n * sf2 - trace_q + trace_s;
    out.terms.expected_log_likelihood =
        s * (-0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(noise) - 0.5 * c * quad);
  }

  // Blocks involving the old inducing inputs are whitened by the old prior
  // factor on the a side: k_ba holds K_ba L'^{-T} and k_aa holds L'^{-1} K_aa L'^{-T}.
  Eigen::MatrixXd d_ba, k_ba_raw, k_ba, wa, d_aa, k_aa_raw, k_aa, wa_p;
  Eigen::VectorXd ma, g_old;
  if (problem.old != nullptr) {
    const OldPosteriorTerms& old = *problem.old;
    d_ba = squared_distances(z, old.inducing);
    k_ba_raw = rbf_from_distances(d_ba, hyper);
    k_ba = whiten_columns(old, k_ba_raw);
    wa = lb.solve(k_ba);
    d_aa = squared_distances(old.inducing, old.inducing);
    k_aa_raw = rbf_from_distances(d_aa, hyper);
    k_aa = whiten_both(old, k_aa_raw);
    ma = wa.transpose() * mean;
    wa_p = wa * old.precision_gap;
    const double tr_p_kaa = (old.precision_gap.array() * k_aa.array()).sum();
    const double tr_p_kab_wa = (wa_p.array() * k_ba.array()).sum();
    const double tr_p_wsw = ((cov * wa).array() * wa_p.array()).sum();
    const Eigen::VectorXd p_ma = old.precision_gap * ma;
    g_old = old.shift - p_ma;
    out.terms.old_correction = old.constant - 0.5 * ma.dot(p_ma) + ma.dot(old.shift) -
                               0.5 * (tr_p_kaa - tr_p_kab_wa + tr_p_wsw);
  }

  out.value = out.terms.total();
  if (mode == GradientMode::none) return out;
  const bool full = mode == GradientMode::full;

  const Eigen::MatrixXd k_inv = lb.solve(identity(m));
  Eigen::MatrixXd g_kbb = 0.5 * (k_inv * cov * k_inv + alpha * alpha.transpose() - k_inv);
  Eigen::VectorXd g_mean;
  Eigen::MatrixXd g_cov;
  if (full) {
    g_mean = -alpha;
    g_cov = -0.5 * k_inv;
  }
  Eigen::Vector3d g_hyper = Eigen::Vector3d::Zero();

  if (has_data) {
    const Eigen::MatrixXd g_w = s * c * (mean * resid.transpose() + 0.5 * k_bf - sw);
    const Eigen::MatrixXd kg = k_inv * g_w;
    const Eigen::MatrixXd g_kbf = 0.5 * s * c * w + kg;
    g_kbb.noalias() -= kg * w.transpose();
    if (full) {
      g_mean.noalias() += s * c * (w * resid);
      g_cov.noalias() -= 0.5 * s * c * (w * w.transpose());
    }
    add_kernel_block_gradient(g_kbf, k_bf, d_bf, l2, g_hyper);
    const double d_e_dc = s * (0.5 * n / c - 0.5 * quad);
    g_hyper(1) += sf2 * s * (-0.5 * c * n);
    g_hyper(2) += -c * d_e_dc;
  }

  if (problem.old != nullptr) {
    const OldPosteriorTerms& old = *problem.old;
    const Eigen::MatrixXd g_wa =
        mean * g_old.transpose() + 0.5 * k_ba * old.precision_gap - cov * wa_p;
    const Eigen::MatrixXd kg = k_inv * g_wa;
    const Eigen::MatrixXd g_kba = 0.5 * wa_p + kg;
    g_kbb.noalias() -= kg * wa.transpose();
    if (full) {
      g_mean.noalias() += wa * g_old;
      g_cov.noalias() -= 0.5 * (wa_p * wa.transpose());
    }
    const Eigen::MatrixXd dk_ba = whiten_columns(old, (k_ba_raw.array() * d_ba.array()).matrix());
    g_hyper(0) += (g_kba.array() * dk_ba.array()).sum() / l2;
    g_hyper(1) += (g_kba.array() * k_ba.array()).sum();
    const Eigen::MatrixXd dk_aa = whiten_both(old, (k_aa_raw.array() * d_aa.array()).matrix());
    g_hyper(0) += -0.5 * (old.precision_gap.array() * dk_aa.array()).sum() / l2;
    g_hyper(1) += -0.5 * (old.precision_gap.array() * k_aa.array()).sum();
  }

  add_kernel_block_gradient(g_kbb, k_bb, d_bb, l2, g_hyper);

  out.grad_hyper = g_hyper;
  if (!full) return out;
  out.grad_mean = g_mean;
  const Eigen::MatrixXd g_sym = symmetrized(g_cov);
  Eigen::MatrixXd g_chol = (2.0 * g_sym * chol).triangularView<Eigen::Lower>();
  g_chol.diagonal().array() += chol.diagonal().array().inverse();
  out.grad_chol = g_chol;
  return out;
}

}  // namespace

BoundEvaluation evaluate_bound(const BoundProblem& problem, const Hyperparameters& hyper,
                               const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol,
                               bool with_gradient) {
  return evaluate(problem, hyper, mean, chol, with_gradient ? GradientMode::full : GradientMode::none);
}

VariationalState optimal_variational(const BoundProblem& problem, const Hyperparameters& hyper) {
  const PointSet& z = *problem.inducing;
  const Eigen::Index m = z.rows();
  const CholeskyFactor lb = cholesky_psd(rbf_kernel(z, z, hyper));
  const auto l = lb.lower.triangularView<Eigen::Lower>();

  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  if (problem.batch != nullptr && !problem.batch->empty()) {
    const double sc = problem.likelihood_scale / hyper.noise_variance();
    const Eigen::MatrixXd w = l.solve(rbf_kernel(z, problem.batch->inputs, hyper));
    precision.noalias() += sc * w * w.transpose();
    rhs.noalias() += sc * w * problem.batch->targets;
  }
  if (problem.old != nullptr) {
    const Eigen::MatrixXd k_ba = whiten_columns(*problem.old, rbf_kernel(z, problem.old->inducing, hyper));
    const Eigen::MatrixXd wa = l.solve(k_ba);
    const Eigen::MatrixXd wb = wa * problem.old->precision_factor;
    precision.noalias() += wb * wb.transpose();
    rhs.noalias() += wa * problem.old->shift;
  }
  // Sv = (I + G)^{-1}, mv = Sv h; then S = L Sv L^T and m = L mv.
  Eigen::MatrixXd shifted = symmetrized(precision);
  shifted.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> r(shifted);
  if (r.info() != Eigen::Success) throw NumericalError("site precision is not positive semi-definite");
  const Eigen::MatrixXd t = r.matrixL().solve(lb.lower.transpose());
  VariationalState q;
  q.cov = symmetrized(t.transpose() * t);
  q.mean = t.transpose() * r.matrixL().solve(rhs);
  q.site = WhitenedSite{std::move(precision), std::move(rhs)};
  return q;
}

ProfiledBound profiled_bound(const BoundProblem& problem, const Hyperparameters& hyper,
                             bool with_gradient) {
  ProfiledBound out;
  out.q = optimal_variational(problem, hyper);
  const auto eval = evaluate(problem, hyper, out.q.mean, covariance_factor(out.q.cov),
                             with_gradient ? GradientMode::hyper : GradientMode::none);
  out.value = eval.value;
  out.grad_hyper = eval.grad_hyper;
  return out;
}

}  // namespace oipp
