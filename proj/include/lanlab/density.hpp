#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "lanlab/core.hpp"
#include "lanlab/ftransform.hpp"
#include "lanlab/model.hpp"
#include "lanlab/quadrature.hpp"
#include "lanlab/rng.hpp"
#include "lanlab/stats.hpp"

namespace lanlab {

struct GaussianMoments {
  double mean = 0.0;
  double sd = 0.0;
};

/// Mean and standard deviation of the no-jump transition X_{t+dt} | X_t = x,
/// N unchanged on (t, t+dt]. Between jumps the state follows the compensated
/// dynamics dX = (b - int c nu) dt + sigma dB.
inline GaussianMoments q0_moments(const JumpDiffusionModel& model, double theta, double dt,
                                  double x) {
  if (!(dt > 0.0)) throw invalid_parameter_error("q0_moments: dt must be > 0");
  const double sigma = model.sigma_const;
  const double comp = model.levy.intensity * model.levy.jump_mean[0];
  if (model.closed_form == ClosedForm::additive) {
    return {x + (theta - comp) * dt, sigma * std::sqrt(dt)};
  }
  if (model.closed_form == ClosedForm::ou) {
    if (!(theta > 0.0)) throw invalid_parameter_error("q0_moments: OU requires theta > 0");
    const double e1 = std::exp(-theta * dt);
    const double var = sigma * sigma * (1.0 - e1 * e1) / (2.0 * theta);
    return {e1 * x - comp * (1.0 - e1) / theta, std::sqrt(var)};
  }
  throw unsupported_error("q0_moments: closed-form model required");
}

/// Transition density conditioned on zero jumps in the interval.
inline double q0_density(const JumpDiffusionModel& model, double theta, double dt, double x,
                         double y) {
  const GaussianMoments m = q0_moments(model, theta, dt, x);
  return normal_pdf(y, m.mean, m.sd * m.sd);
}

/// Additive model with Gaussian jumps: the i-jump conditional density is the
/// normal with mean x + theta*dt - lambda*mJ*dt + i*mJ and variance
/// sigma^2*dt + i*sJ^2.
inline double q_i_closed_form(const JumpDiffusionModel& model, double theta, double dt,
                              double x, double y, int i) {
  if (model.closed_form != ClosedForm::additive || !model.levy.is_gaussian)
    throw unsupported_error("q_i_closed_form: additive model with Gaussian jumps required");
  if (i < 0) throw invalid_parameter_error("q_i_closed_form: i must be >= 0");
  if (!(dt > 0.0)) throw invalid_parameter_error("q_i_closed_form: dt must be > 0");
  const double mj = model.levy.g_mean, sj = model.levy.g_sd;
  const double lambda = model.levy.intensity;
  const double var = model.sigma_const * model.sigma_const * dt + double(i) * sj * sj;
  if (!(var > 0.0)) throw invalid_parameter_error("q_i_closed_form: nonpositive variance");
  const double mean = x + theta * dt - lambda * mj * dt + double(i) * mj;
  return normal_pdf(y, mean, var);
}

inline double q_i_log_closed_form(const JumpDiffusionModel& model, double theta, double dt,
                                  double x, double y, int i) {
  const double mj = model.levy.g_mean, sj = model.levy.g_sd;
  const double lambda = model.levy.intensity;
  const double var = model.sigma_const * model.sigma_const * dt + double(i) * sj * sj;
  const double mean = x + theta * dt - lambda * mj * dt + double(i) * mj;
  return normal_logpdf(y, mean, var);
}

/// Poisson-mixture evaluation plan for p(dt,x,y) = sum_i q_(i) w_i.
struct MixtureDensitySpec {
  const JumpDiffusionModel* model = nullptr;
  double tail_tol = 1e-12;
  int time_nodes = 16;   // Gauss-Legendre nodes for OU jump-time integrals
  int mc_draws = 10000;  // jump-time Monte Carlo for OU components with i >= 3

  void validate() const {
    if (!model) throw invalid_parameter_error("MixtureDensitySpec: missing model");
    if (model->closed_form == ClosedForm::none)
      throw invalid_parameter_error("MixtureDensitySpec: closed-form model required");
    if (!(tail_tol > 0.0)) throw invalid_parameter_error("MixtureDensitySpec: tail_tol > 0");
  }

  /// Smallest truncation order with Poisson tail below tail_tol.
  int i_max(double dt) const {
    const double mean = model->levy.intensity * dt;
    int i = 0;
    while (poisson_upper_tail(mean, i) >= tail_tol && i < 400) ++i;
    return i;
  }
};

struct DensityValue {
  double value = 0.0;
  double truncation_error = 0.0;  // upper bound on the discarded tail mass contribution
};

/// OU model with Gaussian jumps: q_(i) by integrating the jump times.
/// i = 1 uses a Gauss-Legendre rule, i = 2 a tensor rule over the two
/// (exchangeable) uniform times, i >= 3 a deterministic Monte Carlo stream.
inline double q_i_ou(const MixtureDensitySpec& spec, double theta, double dt, double x,
                     double y, int i) {
  const JumpDiffusionModel& model = *spec.model;
  if (model.closed_form != ClosedForm::ou || !model.levy.is_gaussian)
    throw unsupported_error("q_i_ou: OU model with Gaussian jumps required");
  if (!(theta > 0.0)) throw invalid_parameter_error("q_i_ou: theta must be > 0");
  const double sigma = model.sigma_const;
  const double mj = model.levy.g_mean, sj = model.levy.g_sd;
  const double comp = model.levy.intensity * mj;
  const double e1 = std::exp(-theta * dt);
  const double v_gauss = sigma * sigma * (1.0 - e1 * e1) / (2.0 * theta);
  const double base_mean = e1 * x - comp * (1.0 - e1) / theta;

  auto density_given_times = [&](std::span<const double> taus) {
    double mean = base_mean;
    double var = v_gauss;
    for (double tau : taus) {
      const double w = std::exp(-theta * (dt - tau));
      mean += mj * w;
      var += sj * sj * w * w;
    }
    return normal_pdf(y, mean, var);
  };

  if (i == 0) return normal_pdf(y, base_mean, v_gauss);
  if (i == 1) {
    const QuadRule rule = gauss_legendre(spec.time_nodes).mapped_to(0.0, dt);
    double s = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double tau[1] = {rule.nodes[j]};
      s += rule.weights[j] * density_given_times(std::span<const double>(tau, 1));
    }
    return s / dt;
  }
  if (i == 2) {
    const QuadRule rule = gauss_legendre(spec.time_nodes).mapped_to(0.0, dt);
    double s = 0.0;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a)
      for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
        const double tau[2] = {rule.nodes[a], rule.nodes[b]};
        s += rule.weights[a] * rule.weights[b] *
             density_given_times(std::span<const double>(tau, 2));
      }
    return s / (dt * dt);
  }
  // i >= 3: deterministic jump-time Monte Carlo; the Poisson weight of these
  // components is negligible at high frequency, so sampling error is not
  // load-bearing.
  RngStream rng(0x71694F55ull + std::uint64_t(i), 0);
  std::vector<double> taus(i);
  double s = 0.0;
  for (int r = 0; r < spec.mc_draws; ++r) {
    for (int j = 0; j < i; ++j) taus[j] = dt * rng.uniform();
    s += density_given_times(taus);
  }
  return s / double(spec.mc_draws);
}

/// Jump-count conditional density dispatch for the built-in models.
inline double q_i_density(const MixtureDensitySpec& spec, double theta, double dt, double x,
                          double y, int i) {
  const JumpDiffusionModel& model = *spec.model;
  if (i == 0) return q0_density(model, theta, dt, x, y);
  if (model.closed_form == ClosedForm::additive) return q_i_closed_form(model, theta, dt, x, y, i);
  return q_i_ou(spec, theta, dt, x, y, i);
}

/// Transition density as the Poisson mixture over jump counts,
/// p = sum_{i<=i_max} q_(i) e^{-lambda dt} (lambda dt)^i / i!, with the
/// truncated tail bounded and reported.
inline DensityValue mixture_density(const MixtureDensitySpec& spec, double theta, double dt,
                                    double x, double y) {
  spec.validate();
  if (!(dt > 0.0 && dt <= 1.0))
    throw invalid_parameter_error("mixture_density: dt must lie in (0,1]");
  const JumpDiffusionModel& model = *spec.model;
  const double lambda = model.levy.intensity;
  if (lambda > 0.0 && !model.levy.is_gaussian)
    throw unsupported_error("mixture_density: Gaussian jump law required");

  DensityValue out;
  if (lambda <= 0.0) {
    out.value = q0_density(model, theta, dt, x, y);
    out.truncation_error = 0.0;
    return out;
  }

  const int imax = spec.i_max(dt);
  const double mean = lambda * dt;
  if (poisson_upper_tail(mean, imax) >= spec.tail_tol)
    throw accuracy_error("mixture_density: Poisson tail cannot be truncated below tail_tol");
  double value = 0.0;
  double log_w = -mean;  // log weight of i = 0
  for (int i = 0; i <= imax; ++i) {
    if (i > 0) log_w += std::log(mean) - std::log(double(i));
    value += std::exp(log_w) * q_i_density(spec, theta, dt, x, y, i);
  }
  out.value = value;

  // sup_i>imax q_(i) is bounded by the peak of the widest-variance floor:
  // every component has variance at least the Gaussian part.
  double var_floor;
  if (model.closed_form == ClosedForm::additive) {
    var_floor = model.sigma_const * model.sigma_const * dt +
                double(imax + 1) * model.levy.g_sd * model.levy.g_sd;
  } else {
    const double e1 = std::exp(-theta * dt);
    var_floor = model.sigma_const * model.sigma_const * (1.0 - e1 * e1) / (2.0 * theta);
  }
  out.truncation_error = poisson_upper_tail(mean, imax) / std::sqrt(2.0 * M_PI * var_floor);
  return out;
}

struct Q1Options {
  int time_nodes = 24;
  int space_nodes = 128;
  bool check_convergence = true;
  double convergence_tol = 1e-6;
};

namespace detail {

inline double q1_ck_pass(const std::function<double(double, double, double)>& q0,
                         const std::function<GaussianMoments(double, double)>& moments,
                         const std::function<double(double, double)>& jump_map, double delta,
                         double x, double y, double z, int time_nodes, int space_nodes) {
  const QuadRule tr = gauss_legendre(time_nodes).mapped_to(0.0, delta);
  const QuadRule hr = gauss_hermite(space_nodes);
  std::vector<double> logs(hr.nodes.size());

  double total = 0.0;
  for (std::size_t it = 0; it < tr.nodes.size(); ++it) {
    const double t = tr.nodes[it];
    const GaussianMoments m1 = moments(t, x);

    // Locate the state v* whose post-jump flow lands at y, by Newton on the
    // mean map; built-in models make this map affine.
    double v = m1.mean;
    double slope = 1.0;
    for (int iter = 0; iter < 60; ++iter) {
      const double eps = 1e-6 * (1.0 + std::fabs(v));
      const double f0 = moments(delta - t, v + jump_map(v, z)).mean - y;
      const double fp = moments(delta - t, v + eps + jump_map(v + eps, z)).mean - y;
      const double fm = moments(delta - t, v - eps + jump_map(v - eps, z)).mean - y;
      slope = (fp - fm) / (2.0 * eps);
      if (!(std::fabs(slope) > 1e-12)) break;
      const double step = f0 / slope;
      v -= step;
      if (std::fabs(step) < 1e-12 * (1.0 + std::fabs(v))) break;
    }
    const double s2 = moments(delta - t, v + jump_map(v, z)).sd / std::max(std::fabs(slope), 1e-12);

    // Gauss-Hermite centered on the product of the two near-Gaussian factors.
    const double w1 = 1.0 / (m1.sd * m1.sd), w2 = 1.0 / (s2 * s2);
    const double mp = (w1 * m1.mean + w2 * v) / (w1 + w2);
    const double sp = 1.0 / std::sqrt(w1 + w2);
    for (std::size_t j = 0; j < hr.nodes.size(); ++j) {
      const double u = hr.nodes[j];
      const double vj = mp + M_SQRT2 * sp * u;
      const double a = q0(t, x, vj);
      const double b = q0(delta - t, vj + jump_map(vj, z), y);
      const double li = (a > 0.0 && b > 0.0) ? std::log(a) + std::log(b)
                                             : -std::numeric_limits<double>::infinity();
      logs[j] = std::log(hr.weights[j]) + u * u + li;
    }
    const double inner = M_SQRT2 * sp * std::exp(logsumexp(logs));
    total += tr.weights[it] * inner;
  }
  return total / delta;
}

}  // namespace detail

/// Chapman-Kolmogorov construction of the one-jump conditional density
///   q_(1)(delta, x, y; z)
///     = (1/delta) int_0^delta int q_(0)(t,x,v) q_(0)(delta-t, v+c(v,z), y) dv dt,
/// the jump time being uniform given exactly one jump. `q0_moments` supplies
/// location/scale hints used only to place quadrature nodes.
inline double q1_chapman_kolmogorov(
    const std::function<double(double, double, double)>& q0,
    const std::function<GaussianMoments(double, double)>& q0_moments_fn,
    const std::function<double(double, double)>& jump_map, double delta, double x, double y,
    double z, const Q1Options& opt = {}) {
  if (!(delta > 0.0)) throw invalid_parameter_error("q1_chapman_kolmogorov: delta > 0");
  const double coarse = detail::q1_ck_pass(q0, q0_moments_fn, jump_map, delta, x, y, z,
                                           opt.time_nodes, opt.space_nodes);
  if (!opt.check_convergence) return coarse;
  const double fine = detail::q1_ck_pass(q0, q0_moments_fn, jump_map, delta, x, y, z,
                                         2 * opt.time_nodes, 2 * opt.space_nodes);
  const double scale = std::max({std::fabs(fine), std::fabs(coarse), 1e-300});
  if (std::fabs(fine - coarse) / scale > opt.convergence_tol &&
      std::fabs(fine - coarse) > 1e-14)
    throw accuracy_error("q1_chapman_kolmogorov: quadrature did not converge");
  return fine;
}

/// Model-backed overload (d = 1); uses the model's no-jump closed form.
inline double q1_chapman_kolmogorov(const JumpDiffusionModel& model, double theta,
                                    double delta, double x, double y, double z,
                                    const Q1Options& opt = {}) {
  if (model.dim != 1)
    throw precondition_error("q1_chapman_kolmogorov: one-dimensional state required");
  auto q0 = [&model, theta](double dt, double x0, double yy) {
    return q0_density(model, theta, dt, x0, yy);
  };
  auto moments = [&model, theta](double dt, double x0) {
    return q0_moments(model, theta, dt, x0);
  };
  auto cmap = [&model](double v, double zz) {
    const double xv[1] = {v}, zv[1] = {zz};
    double out[1];
    model.jump_coeff(std::span<const double>(xv, 1), std::span<const double>(zv, 1),
                     std::span<double>(out, 1));
    return out[0];
  };
  return q1_chapman_kolmogorov(q0, moments, cmap, delta, x, y, z, opt);
}

struct BoundCheckEntry {
  double delta = 0.0, y = 0.0;
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
};

struct GaussianBoundReport {
  std::vector<BoundCheckEntry> entries;
  bool all_pass = true;
  double bound_constant = 0.0;  // C
  double bound_scale = 0.0;     // c in exp(-|y-x|^2 / (c delta))
  double fitted_decay_rate = 0.0;
  double target_decay_rate = 0.0;  // 1 / (2 sigma^2)
};

/// Checks the Gaussian upper bound q_(0)(D,x,y) <= C D^{-1/2} e^{-|y-x|^2/(c D)}
/// for the constant-coefficient (bounded drift) model with the admissible pair
/// c = 4 sigma^2, C = (2 pi sigma^2)^{-1/2} e^{L^2/(2 sigma^2)}, L the drift
/// bound; valid for delta <= 1 by Young's inequality.
inline GaussianBoundReport gaussian_bound_check(const JumpDiffusionModel& model, double theta,
                                                std::span<const double> deltas, double x,
                                                std::span<const double> y_grid) {
  if (model.closed_form != ClosedForm::additive)
    throw precondition_error("gaussian_bound_check: constant-coefficient model required");
  const double sigma = model.sigma_const;
  const double drift_bound =
      std::fabs(theta - model.levy.intensity * model.levy.jump_mean[0]);
  GaussianBoundReport rep;
  rep.bound_scale = 4.0 * sigma * sigma;
  rep.bound_constant = std::exp(drift_bound * drift_bound / (2.0 * sigma * sigma)) /
                       std::sqrt(2.0 * M_PI * sigma * sigma);
  rep.target_decay_rate = 1.0 / (2.0 * sigma * sigma);

  for (double delta : deltas) {
    if (!(delta > 0.0 && delta <= 1.0))
      throw invalid_parameter_error("gaussian_bound_check: delta must lie in (0,1]");
    for (double y : y_grid) {
      BoundCheckEntry e;
      e.delta = delta;
      e.y = y;
      e.lhs = q0_density(model, theta, delta, x, y);
      e.rhs = rep.bound_constant / std::sqrt(delta) *
              std::exp(-(y - x) * (y - x) / (rep.bound_scale * delta));
      e.pass = e.lhs <= e.rhs * (1.0 + 1e-12);
      rep.all_pass = rep.all_pass && e.pass;
      rep.entries.push_back(e);
    }
  }

  // Small-time decay rate: regress -log q0 on |y - x - a delta|^2 / delta at
  // the farthest grid point.
  double y_far = x;
  for (double y : y_grid)
    if (std::fabs(y - x) > std::fabs(y_far - x)) y_far = y;
  if (y_far != x && deltas.size() >= 2) {
    const double a_eff = theta - model.levy.intensity * model.levy.jump_mean[0];
    std::vector<double> xs, ys;
    for (double delta : deltas) {
      const double dev = y_far - x - a_eff * delta;
      xs.push_back(dev * dev / delta);
      ys.push_back(-std::log(q0_density(model, theta, delta, x, y_far)));
    }
    rep.fitted_decay_rate = ols_fit(xs, ys).slope;
  }
  return rep;
}

}  // namespace lanlab
