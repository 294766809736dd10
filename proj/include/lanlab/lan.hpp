#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lanlab/core.hpp"
#include "lanlab/density.hpp"
#include "lanlab/model.hpp"
#include "lanlab/quadrature.hpp"
#include "lanlab/simulate.hpp"

namespace lanlab {

/// Threshold separating diffusive increments, O(sqrt(delta)), from retained
/// jumps: r = 4 sigma_max sqrt(delta).
inline double default_jump_threshold(const JumpDiffusionModel& model, double delta) {
  if (!(model.diffusion_norm_bound > 0.0))
    throw precondition_error("default_jump_threshold: unknown diffusion bound");
  return 4.0 * model.diffusion_norm_bound * std::sqrt(delta);
}

/// Sum over intervals of the expansion's main term
///   xi_k = (u/sqrt(nD)) int_0^1 (d_theta b(theta(l),X_k))^T (ss^T)^{-1}(X_k)
///            [ sigma(X_k) dB_k + (b(theta_0,X_k) - b(theta(l),X_k)) D ] dl,
/// the l-integral by Gauss-Legendre (exact when b is affine in theta).
inline double main_term_sum(const ObservationRecord& rec, const JumpDiffusionModel& model,
                            const ParameterContext& ctx, int ell_nodes = 16) {
  if (!rec.has_latent())
    throw precondition_error("main_term_sum: latent Brownian increments required");
  if (rec.n != ctx.n) throw precondition_error("main_term_sum: context/record mismatch");
  const std::size_t d = model.dim;
  const QuadRule rule = gauss_legendre(ell_nodes).mapped_to(0.0, 1.0);
  const double scale = ctx.u / ctx.rate();

  std::vector<double> ssq, chol, g(d), w(d), b0(d), bl(d), sig(d * d), inner(d);
  double total = 0.0;
  for (std::size_t k = 0; k < rec.n; ++k) {
    const auto x = rec.state(k);
    const auto& db = rec.latent[k].brownian_increment;
    model.diffusion_squared(x, ssq);
    chol = ssq;
    if (!cholesky(chol, d)) throw ellipticity_error("main_term_sum: singular diffusion");
    model.diffusion(x, sig);
    model.drift(ctx.theta0, x, b0);

    double xi = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double theta_l = ctx.theta_of(rule.nodes[q]);
      model.drift_theta_deriv(theta_l, x, g);
      model.drift(theta_l, x, bl);
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += sig[i * d + c] * db[c];
        inner[i] = s + (b0[i] - bl[i]) * ctx.delta_n;
      }
      chol_solve(chol, g, w, d);
      xi += rule.weights[q] * dot(w, inner);
    }
    total += scale * xi;
  }
  return total;
}

/// Gaussian quasi log-likelihood ratio built from Euler transitions,
/// optionally dropping increments larger than `jump_threshold`.
inline double quasi_llr(const ObservationRecord& rec, const JumpDiffusionModel& model,
                        const ParameterContext& ctx,
                        std::optional<double> jump_threshold = std::nullopt) {
  if (rec.n != ctx.n) throw precondition_error("quasi_llr: context/record mismatch");
  const std::size_t d = model.dim;
  const double theta1 = ctx.theta_n();
  std::vector<double> ssq, chol, b0(d), b1(d), dx(d), v0(d), v1(d), s0(d), s1(d);
  double total = 0.0;
  for (std::size_t k = 0; k < rec.n; ++k) {
    const auto x = rec.state(k);
    const auto xn = rec.state(k + 1);
    for (std::size_t i = 0; i < d; ++i) dx[i] = xn[i] - x[i];
    if (jump_threshold && norm(dx) > *jump_threshold) continue;
    model.diffusion_squared(x, ssq);
    chol = ssq;
    if (!cholesky(chol, d)) throw ellipticity_error("quasi_llr: singular diffusion");
    model.drift(ctx.theta0, x, b0);
    model.drift(theta1, x, b1);
    for (std::size_t i = 0; i < d; ++i) {
      v0[i] = dx[i] - b0[i] * ctx.delta_n;
      v1[i] = dx[i] - b1[i] * ctx.delta_n;
    }
    chol_solve(chol, v0, s0, d);
    chol_solve(chol, v1, s1, d);
    total += 0.5 * (dot(v0, s0) - dot(v1, s1)) / ctx.delta_n;
  }
  return total;
}

/// Exact log-likelihood ratio via the Poisson-mixture transition density,
/// computed in log space (additive model).
inline double exact_llr(const ObservationRecord& rec, const MixtureDensitySpec& spec,
                        const ParameterContext& ctx) {
  spec.validate();
  const JumpDiffusionModel& model = *spec.model;
  if (model.closed_form != ClosedForm::additive)
    throw precondition_error("exact_llr: additive model required");
  if (rec.n != ctx.n) throw precondition_error("exact_llr: context/record mismatch");
  const double lambda = model.levy.intensity;
  const double theta1 = ctx.theta_n();

  if (lambda <= 0.0) {
    double total = 0.0;
    for (std::size_t k = 0; k < rec.n; ++k) {
      const double x = rec.scalar_state(k), y = rec.scalar_state(k + 1);
      const GaussianMoments m0 = q0_moments(model, ctx.theta0, ctx.delta_n, x);
      const GaussianMoments m1 = q0_moments(model, theta1, ctx.delta_n, x);
      total += normal_logpdf(y, m1.mean, m1.sd * m1.sd) -
               normal_logpdf(y, m0.mean, m0.sd * m0.sd);
    }
    return total;
  }

  if (!model.levy.is_gaussian)
    throw unsupported_error("exact_llr: Gaussian jump law required");
  const int imax = spec.i_max(ctx.delta_n);
  const double mean_count = lambda * ctx.delta_n;
  std::vector<double> log_w(imax + 1);
  for (int i = 0; i <= imax; ++i) log_w[i] = poisson_log_pmf(i, mean_count);

  std::vector<double> terms0(imax + 1), terms1(imax + 1);
  double total = 0.0;
  for (std::size_t k = 0; k < rec.n; ++k) {
    const double x = rec.scalar_state(k), y = rec.scalar_state(k + 1);
    for (int i = 0; i <= imax; ++i) {
      terms0[i] = log_w[i] + q_i_log_closed_form(model, ctx.theta0, ctx.delta_n, x, y, i);
      terms1[i] = log_w[i] + q_i_log_closed_form(model, theta1, ctx.delta_n, x, y, i);
    }
    const double l0 = logsumexp(terms0), l1 = logsumexp(terms1);
    if (!std::isfinite(l0) || !std::isfinite(l1))
      throw numeric_error("exact_llr: vanishing transition density at interval " +
                          std::to_string(k));
    total += l1 - l0;
  }
  return total;
}

/// Skorohod-decomposition remainders and expansion terms for one interval,
/// evaluated on the simulated path (quadrature on the fine sub-grid, Ito sums
/// for the stochastic integrals). R1-R3 use the closed-form OU flow
/// derivatives; they vanish identically for the additive model.
struct RemainderComponents {
  double z4 = 0.0, z5 = 0.0, z6 = 0.0;
  double r4 = 0.0, r5 = 0.0, r6 = 0.0;
  std::optional<double> r1, r2, r3;

  double centered_r123() const {
    if (!r1 || !r2 || !r3)
      throw precondition_error("RemainderComponents: R1-R3 unavailable");
    return -*r1 + *r2 + *r3;
  }
};

/// Interval-level evaluation used both by record post-processing and by the
/// streaming scaling study. `theta_sim` is the parameter the path was
/// simulated under (enters Z4); `theta` is the evaluation parameter.
inline RemainderComponents remainder_components_interval(
    const JumpDiffusionModel& model, double theta, double theta_sim, double x_k,
    const IntervalLatent& lat, double delta, int fine_substeps) {
  if (model.dim != 1)
    throw unsupported_error("remainder_components: one-dimensional models only");
  RemainderComponents out;
  const double sigma = model.sigma_const;
  const double sig2 = sigma * sigma;
  const double xk[1] = {x_k};
  double dtheta_b[1];
  model.drift_theta_deriv(theta, std::span<const double>(xk, 1), dtheta_b);
  const double e_theta = dtheta_b[0] / sig2;

  // Jump functionals need only the event list and the (constant) compensator.
  const double comp = model.levy.intensity * model.levy.jump_mean[0];
  double jump_sum = 0.0;
  for (const auto& ev : lat.jumps) jump_sum += ev.applied[0];
  const double compensated = jump_sum - comp * delta;
  out.z6 = delta * e_theta * compensated;
  out.r6 = delta * e_theta * compensated;

  if (model.closed_form == ClosedForm::additive) {
    // Constant coefficients annihilate every difference term.
    out.r1 = 0.0;
    out.r2 = 0.0;
    out.r3 = 0.0;
    return out;
  }

  if (fine_substeps <= 0 || lat.fine_states.empty())
    throw precondition_error("remainder_components: fine sub-grid required");
  const int m = fine_substeps;
  const double h = delta / double(m);
  const auto& ys = lat.fine_states;
  const auto& dw = lat.fine_dw;

  // Z4/R4: time integrals of drift differences along the path.
  {
    std::vector<double> f0(m + 1), f1(m + 1);
    double b_ref0[1], b_ref1[1], b_s[1];
    model.drift(theta_sim, std::span<const double>(xk, 1), b_ref0);
    model.drift(theta, std::span<const double>(xk, 1), b_ref1);
    for (int j = 0; j <= m; ++j) {
      const double yj[1] = {ys[j]};
      model.drift(theta_sim, std::span<const double>(yj, 1), b_s);
      f0[j] = b_s[0] - b_ref0[0];
      model.drift(theta, std::span<const double>(yj, 1), b_s);
      f1[j] = b_s[0] - b_ref1[0];
    }
    out.z4 = delta * e_theta * trapezoid(f0, h);
    out.r4 = delta * e_theta * trapezoid(f1, h);
  }

  // Z5/R5: Ito sums of diffusion differences (zero for constant sigma).
  {
    double sig_ref[1], sig_s[1];
    const double x0v[1] = {x_k};
    model.diffusion(std::span<const double>(x0v, 1), sig_ref);
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      const double yj[1] = {ys[j]};
      model.diffusion(std::span<const double>(yj, 1), sig_s);
      acc += (sig_s[0] - sig_ref[0]) * dw[j];
    }
    out.z5 = delta * e_theta * acc;
    out.r5 = delta * e_theta * acc;
  }

  if (model.closed_form != ClosedForm::ou) return out;

  // OU flow derivatives in closed form:
  //   grad_x Y_s = e^{-theta (s - t_k)},  D_s Y_u = sigma e^{-theta (u - s)},
  //   (grad_x Y_u)^{-1} d_theta b(theta, Y_u) = -e^{theta (u - t_k)} Y_u.
  const double th = theta;

  // R1 = int int_{s<u} tr( D_s(-e^{theta(u-t_k)} Y_u)^* sigma^{-1} grad Y_s ) du ds.
  {
    std::vector<double> outer(m + 1, 0.0), inner(m + 1);
    for (int j = 0; j <= m; ++j) {
      const double s = double(j) * h;
      for (int l = j; l <= m; ++l) {
        const double u = double(l) * h;
        const double d_s_term = -std::exp(th * u) * sigma * std::exp(-th * (u - s));
        inner[l] = d_s_term * (1.0 / sigma) * std::exp(-th * s);
      }
      outer[j] = trapezoid(std::span<const double>(inner.data() + j, std::size_t(m - j + 1)), h);
    }
    out.r1 = trapezoid(outer, h);
  }

  // R2 = [int -e^{theta(s-t_k)} Y_s ds] [int (e^{-theta(s-t_k)} - 1) sigma^{-1} dW_s]
  {
    std::vector<double> f(m + 1);
    for (int j = 0; j <= m; ++j) f[j] = -std::exp(th * double(j) * h) * ys[j];
    const double a = trapezoid(f, h);
    double b = 0.0;
    for (int j = 0; j < m; ++j) b += (std::exp(-th * double(j) * h) - 1.0) / sigma * dw[j];
    out.r2 = a * b;
  }

  // R3 = [int (Y_{t_k} - e^{theta(s-t_k)} Y_s) ds] sigma^{-1} (W_{t_{k+1}} - W_{t_k})
  {
    std::vector<double> f(m + 1);
    for (int j = 0; j <= m; ++j) f[j] = x_k - std::exp(th * double(j) * h) * ys[j];
    const double a = trapezoid(f, h);
    double dwk = 0.0;
    for (int j = 0; j < m; ++j) dwk += dw[j];
    out.r3 = a * dwk / sigma;
  }
  return out;
}

inline RemainderComponents remainder_components(const ObservationRecord& rec,
                                                const JumpDiffusionModel& model, double theta,
                                                std::size_t k) {
  if (model.closed_form == ClosedForm::none)
    throw unsupported_error("remainder_components: closed-form model required");
  if (!rec.has_latent()) throw precondition_error("remainder_components: latent data required");
  if (k >= rec.n) throw precondition_error("remainder_components: interval out of range");
  return remainder_components_interval(model, theta, rec.theta_sim, rec.scalar_state(k),
                                       rec.latent[k], rec.delta_n, rec.fine_substeps);
}

struct FisherInfo {
  double gamma = 0.0;
  enum class Method { closed_form, ergodic_average } method = Method::closed_form;
  std::size_t n_used = 0;
  double horizon = 0.0;
};

/// Closed-form asymptotic Fisher information of the built-in models:
/// OU: (1/(2 theta0)) (1 + lambda E[z^2]/sigma^2); additive: 1/sigma^2.
inline FisherInfo fisher_closed_form(const JumpDiffusionModel& model, double theta0) {
  FisherInfo info;
  info.method = FisherInfo::Method::closed_form;
  const double sig2 = model.sigma_const * model.sigma_const;
  if (model.closed_form == ClosedForm::additive) {
    info.gamma = 1.0 / sig2;
  } else if (model.closed_form == ClosedForm::ou) {
    if (!(theta0 > 0.0))
      throw invalid_parameter_error("fisher_closed_form: OU requires theta0 > 0");
    info.gamma =
        (1.0 + model.levy.intensity * model.levy.jump_second_moment / sig2) / (2.0 * theta0);
  } else {
    throw precondition_error("fisher_closed_form: closed-form model required");
  }
  return info;
}

/// Ergodic-average Fisher information
///   (1/n) sum_k (d_theta b(theta0, X_k))^T (ss^T)^{-1}(X_k) d_theta b(theta0, X_k).
inline FisherInfo fisher_ergodic(const ObservationRecord& rec,
                                 const JumpDiffusionModel& model, double theta0) {
  const std::size_t d = model.dim;
  std::vector<double> ssq, chol, g(d), w(d);
  double acc = 0.0;
  for (std::size_t k = 0; k < rec.n; ++k) {
    const auto x = rec.state(k);
    model.diffusion_squared(x, ssq);
    chol = ssq;
    if (!cholesky(chol, d)) throw ellipticity_error("fisher_ergodic: singular diffusion");
    model.drift_theta_deriv(theta0, x, g);
    chol_solve(chol, g, w, d);
    acc += dot(g, w);
  }
  FisherInfo info;
  info.method = FisherInfo::Method::ergodic_average;
  info.gamma = acc / double(rec.n);
  info.n_used = rec.n;
  info.horizon = double(rec.n) * rec.delta_n;
  return info;
}

/// Per-replication LAN statistics.
struct LanSample {
  std::optional<double> exact_llr;
  std::optional<double> quasi_llr;
  std::optional<double> main_term;
  std::optional<RemainderComponents> remainder_sums;  // summed over intervals
};

}  // namespace lanlab
