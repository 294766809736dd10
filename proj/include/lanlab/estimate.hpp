#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lanlab/core.hpp"
#include "lanlab/lan.hpp"
#include "lanlab/model.hpp"
#include "lanlab/parallel.hpp"
#include "lanlab/simulate.hpp"
#include "lanlab/stats.hpp"

namespace lanlab {

struct EstimateResult {
  double theta_hat = 0.0;
  int iterations = 0;
  bool converged = false;
  double filtered_fraction = 0.0;  // share of increments dropped by the threshold
  std::optional<double> standardized;  // sqrt(n delta) (theta_hat - theta0)
};

namespace detail {

struct QuasiScore {
  const ObservationRecord& rec;
  const JumpDiffusionModel& model;
  std::optional<double> threshold;
  std::size_t used = 0;

  double operator()(double theta) {
    const std::size_t d = model.dim;
    std::vector<double> ssq, chol, g(d), w(d), b(d), dx(d);
    double s = 0.0;
    used = 0;
    for (std::size_t k = 0; k < rec.n; ++k) {
      const auto x = rec.state(k);
      const auto xn = rec.state(k + 1);
      for (std::size_t i = 0; i < d; ++i) dx[i] = xn[i] - x[i];
      if (threshold && norm(dx) > *threshold) continue;
      ++used;
      model.diffusion_squared(x, ssq);
      chol = ssq;
      if (!cholesky(chol, d)) throw ellipticity_error("drift_qmle: singular diffusion");
      model.drift(theta, x, b);
      model.drift_theta_deriv(theta, x, g);
      for (std::size_t i = 0; i < d; ++i) dx[i] -= b[i] * rec.delta_n;
      chol_solve(chol, dx, w, d);
      s += dot(g, w);
      for (std::size_t i = 0; i < d; ++i) dx[i] += b[i] * rec.delta_n;
    }
    return s;
  }

  double derivative(double theta) {
    if (model.drift_theta2_deriv) {
      const std::size_t d = model.dim;
      std::vector<double> ssq, chol, g(d), g2(d), w(d), b(d), dx(d);
      double s = 0.0;
      for (std::size_t k = 0; k < rec.n; ++k) {
        const auto x = rec.state(k);
        const auto xn = rec.state(k + 1);
        for (std::size_t i = 0; i < d; ++i) dx[i] = xn[i] - x[i];
        if (threshold && norm(dx) > *threshold) continue;
        model.diffusion_squared(x, ssq);
        chol = ssq;
        if (!cholesky(chol, d)) throw ellipticity_error("drift_qmle: singular diffusion");
        model.drift(theta, x, b);
        model.drift_theta_deriv(theta, x, g);
        model.drift_theta2_deriv(theta, x, g2);
        for (std::size_t i = 0; i < d; ++i) dx[i] -= b[i] * rec.delta_n;
        chol_solve(chol, dx, w, d);
        s += dot(g2, w);
        chol_solve(chol, g, w, d);
        s -= dot(g, w) * rec.delta_n;
      }
      return s;
    }
    const double h = 1e-6 * (1.0 + std::fabs(theta));
    return ((*this)(theta + h) - (*this)(theta - h)) / (2.0 * h);
  }
};

}  // namespace detail

/// Quasi-score drift estimator with optional jump filtering: theta_hat solves
///   sum_k 1{|dX_k| <= r} (d_theta b)^T (ss^T)^{-1} (dX_k - b(theta,X_k) D) = 0
/// by safeguarded Newton with bisection fallback on the given interval.
inline EstimateResult drift_qmle(const ObservationRecord& rec,
                                 const JumpDiffusionModel& model, double theta_lo,
                                 double theta_hi,
                                 std::optional<double> jump_threshold = std::nullopt,
                                 double tol = 1e-8, int max_iter = 100,
                                 std::optional<double> theta0 = std::nullopt) {
  if (!(theta_lo < theta_hi)) throw invalid_parameter_error("drift_qmle: empty interval");
  detail::QuasiScore score{rec, model, jump_threshold};

  double s_lo = score(theta_lo);
  const std::size_t used = score.used;
  double s_hi = score(theta_hi);
  EstimateResult res;
  res.filtered_fraction = rec.n == 0 ? 0.0 : 1.0 - double(used) / double(rec.n);

  if (s_lo == 0.0 || s_hi == 0.0) {
    res.theta_hat = (s_lo == 0.0) ? theta_lo : theta_hi;
    res.converged = true;
  } else if (s_lo * s_hi > 0.0) {
    throw no_root_error("drift_qmle: score has no sign change on the interval");
  } else {
    double lo = theta_lo, hi = theta_hi;
    double x = 0.5 * (lo + hi);
    double s = score(x);
    int it = 0;
    for (; it < max_iter; ++it) {
      if (std::fabs(s) < tol) break;
      if ((s > 0.0) == (s_lo > 0.0)) lo = x; else hi = x;
      const double ds = score.derivative(x);
      double xn = (ds != 0.0) ? x - s / ds : 0.5 * (lo + hi);
      if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
      if (std::fabs(xn - x) < 1e-15 * (1.0 + std::fabs(x))) {
        x = xn;
        s = score(x);
        break;
      }
      x = xn;
      s = score(x);
    }
    res.theta_hat = x;
    res.iterations = it;
    res.converged = std::fabs(s) < tol;
  }
  if (theta0) res.standardized = std::sqrt(double(rec.n) * rec.delta_n) * (res.theta_hat - *theta0);
  return res;
}

enum class ThresholdPolicy { none, four_sigma_sqrt_delta, fixed };

struct ThresholdSpec {
  ThresholdPolicy policy = ThresholdPolicy::four_sigma_sqrt_delta;
  double fixed_value = 0.0;

  std::optional<double> resolve(const JumpDiffusionModel& model, double delta) const {
    switch (policy) {
      case ThresholdPolicy::none: return std::nullopt;
      case ThresholdPolicy::fixed: return fixed_value;
      default: return default_jump_threshold(model, delta);
    }
  }
};

struct EstimatorExperimentReport {
  std::size_t replications = 0;
  std::size_t solver_failures = 0;
  double mean_standardized = 0.0;
  double var_standardized = 0.0;
  double ks_to_target = 0.0;     // KS distance to N(0, 1/Gamma)
  double gamma = 0.0;            // from the closed form
  double target_variance = 0.0;  // Gamma^{-1}
  std::vector<EstimateResult> results;  // indexed by replication
};

/// Monte Carlo check of sqrt(n delta)(theta_hat - theta0) against the
/// efficiency bound N(0, Gamma^{-1}). Solver errors are counted, not fatal.
inline EstimatorExperimentReport estimator_normality_experiment(
    const JumpDiffusionModel& model, double theta0, const ParameterContext& ctx,
    std::size_t replications, const ThresholdSpec& threshold, std::uint64_t seed,
    int threads = 1, double x0 = 0.0, double interval_halfwidth = 5.0) {
  if (replications < 1) throw invalid_parameter_error("estimator experiment: replications >= 1");
  const SimulationScheme scheme{
      model.closed_form != ClosedForm::none ? SimMethod::exact_closed_form : SimMethod::euler,
      8};
  const std::optional<double> r = threshold.resolve(model, ctx.delta_n);
  const double lo = theta0 - interval_halfwidth, hi = theta0 + interval_halfwidth;

  struct RepOutcome {
    EstimateResult est;
    bool failed = false;
  };
  const std::uint64_t sim_seed = derive_seed(seed, 0xE571ull);
  auto outcomes = parallel_map_indexed<RepOutcome>(
      replications, resolve_thread_count(threads), [&](std::size_t rep) {
        RepOutcome out;
        const double x0v[1] = {x0};
        const ObservationRecord rec =
            simulate_grid(model, theta0, std::span<const double>(x0v, 1), ctx, scheme,
                          LatentMode::none, {sim_seed, rep});
        try {
          out.est = drift_qmle(rec, model, lo, hi, r, 1e-8, 100, theta0);
          out.failed = !out.est.converged;
        } catch (const error&) {
          out.failed = true;
        }
        return out;
      });

  EstimatorExperimentReport rep;
  rep.replications = replications;
  rep.gamma = fisher_closed_form(model, theta0).gamma;
  rep.target_variance = 1.0 / rep.gamma;
  std::vector<double> standardized;
  for (auto& o : outcomes) {
    rep.results.push_back(o.est);
    if (o.failed) {
      ++rep.solver_failures;
      continue;
    }
    standardized.push_back(*o.est.standardized);
  }
  if (!standardized.empty()) {
    const SampleMoments m = sample_moments(standardized);
    rep.mean_standardized = m.mean;
    rep.var_standardized = m.variance;
    rep.ks_to_target = ks_to_normal(standardized, 0.0, rep.target_variance);
  }
  return rep;
}

}  // namespace lanlab
