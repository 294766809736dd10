#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lanlab/core.hpp"
#include "lanlab/model.hpp"
#include "lanlab/rng.hpp"

namespace lanlab {

enum class SimMethod { euler, exact_closed_form };

struct SimulationScheme {
  SimMethod method = SimMethod::euler;
  int substeps_per_interval = 8;

  void validate() const {
    if (substeps_per_interval < 1)
      throw invalid_parameter_error("SimulationScheme: substeps_per_interval >= 1");
  }
};

enum class LatentMode { none, coarse, fine };

struct JumpEventRec {
  double time = 0.0;                // absolute time, strictly inside the interval
  std::vector<double> size;         // z
  std::vector<double> applied;      // c(X-, z)
};

struct IntervalLatent {
  std::vector<double> brownian_increment;  // aggregated Brownian increment over the interval
  std::vector<JumpEventRec> jumps;
  std::vector<double> fine_states;  // (m+1) x d states on the regular sub-grid
  std::vector<double> fine_dw;      // m x d Brownian increments per substep
};

struct ObservationRecord {
  std::size_t dim = 1;
  std::size_t n = 0;
  double delta_n = 1.0;
  double theta_sim = 0.0;  // parameter the path was simulated under
  std::vector<double> x0;
  std::vector<double> values;  // (n+1) x dim, row k is X_{t_k}
  int fine_substeps = 0;       // >0 when the fine sub-grid was retained
  std::vector<IntervalLatent> latent;  // size n when latent data was retained

  bool has_latent() const { return !latent.empty(); }
  std::span<const double> state(std::size_t k) const {
    return std::span<const double>(values.data() + k * dim, dim);
  }
  double scalar_state(std::size_t k) const { return values[k * dim]; }
};

struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
};

namespace detail {

struct IntervalDraws {
  int count = 0;
  std::vector<double> offsets;  // sorted jump offsets inside (0, delta)
  std::vector<double> sizes;    // count x d
};

// Jump structure of one interval: Poisson count, uniform order-statistic
// times, i.i.d. sizes. Draw order is fixed so streams stay reproducible.
inline IntervalDraws draw_jumps(const JumpDiffusionModel& model, double delta,
                                RngStream& rng) {
  IntervalDraws d;
  if (model.levy.intensity <= 0.0) return d;
  d.count = rng.poisson(model.levy.intensity * delta);
  d.offsets.resize(d.count);
  for (int j = 0; j < d.count; ++j) d.offsets[j] = delta * rng.uniform();
  std::sort(d.offsets.begin(), d.offsets.end());
  d.sizes.resize(std::size_t(d.count) * model.dim);
  for (int j = 0; j < d.count; ++j)
    model.levy.jump_sampler(rng, std::span<double>(d.sizes.data() + std::size_t(j) * model.dim,
                                                   model.dim));
  return d;
}

}  // namespace detail

/// Advances one observation interval with the Euler scheme: jump times are
/// exact (compound Poisson), the continuous part moves on `substeps` equal
/// substeps split at jump times. `x` is updated in place; latent data is
/// appended to `out` when requested.
inline void euler_interval(const JumpDiffusionModel& model, double theta,
                           std::span<double> x, double t0, double delta, int substeps,
                           LatentMode latent, RngStream& rng, IntervalLatent* out,
                           std::size_t interval_index) {
  const std::size_t d = model.dim;
  const detail::IntervalDraws draws = detail::draw_jumps(model, delta, rng);

  std::vector<double> b(d), comp(d), sig(d * d), dw(d), cz(d), db(d, 0.0);
  const bool fine = latent == LatentMode::fine;
  if (out) {
    out->brownian_increment.assign(d, 0.0);
    if (fine) {
      out->fine_states.clear();
      out->fine_states.reserve((substeps + 1) * d);
      out->fine_states.insert(out->fine_states.end(), x.begin(), x.end());
      out->fine_dw.assign(std::size_t(substeps) * d, 0.0);
    }
  }

  int next_jump = 0;
  const double h = delta / double(substeps);
  for (int j = 0; j < substeps; ++j) {
    double s = double(j) * h;
    const double s_end = double(j + 1) * h;
    while (s < s_end) {
      double piece_end = s_end;
      const bool jump_here =
          next_jump < draws.count && draws.offsets[next_jump] <= s_end &&
          draws.offsets[next_jump] > s;
      if (jump_here) piece_end = draws.offsets[next_jump];
      const double dt = piece_end - s;
      if (dt > 0.0) {
        model.drift(theta, x, b);
        model.jump_compensator(x, comp);
        model.diffusion(x, sig);
        const double sq = std::sqrt(dt);
        for (std::size_t i = 0; i < d; ++i) dw[i] = sq * rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
          double diff = 0.0;
          for (std::size_t c = 0; c < d; ++c) diff += sig[i * d + c] * dw[c];
          x[i] += (b[i] - comp[i]) * dt + diff;
        }
        if (out) {
          for (std::size_t i = 0; i < d; ++i) db[i] += dw[i];
          if (fine)
            for (std::size_t i = 0; i < d; ++i) out->fine_dw[std::size_t(j) * d + i] += dw[i];
        }
      }
      if (jump_here) {
        const std::span<const double> z(draws.sizes.data() + std::size_t(next_jump) * d, d);
        model.jump_coeff(x, z, cz);
        if (out) {
          JumpEventRec ev;
          ev.time = t0 + draws.offsets[next_jump];
          ev.size.assign(z.begin(), z.end());
          ev.applied.assign(cz.begin(), cz.end());
          out->jumps.push_back(std::move(ev));
        }
        for (std::size_t i = 0; i < d; ++i) x[i] += cz[i];
        ++next_jump;
      }
      s = piece_end;
    }
    if (!all_finite(x))
      throw simulation_diverged_error("euler_interval: non-finite state", interval_index);
    if (out && fine) out->fine_states.insert(out->fine_states.end(), x.begin(), x.end());
  }
  if (out) out->brownian_increment = db;
}

namespace detail {

// Exact transition for the additive model over one interval.
inline void exact_interval_additive(const JumpDiffusionModel& model, double theta,
                                    double& x, double t0, double delta, RngStream& rng,
                                    IntervalLatent* out) {
  const IntervalDraws draws = draw_jumps(model, delta, rng);
  const double sigma = model.sigma_const;
  const double comp = model.levy.intensity * model.levy.jump_mean[0];
  const double db = std::sqrt(delta) * rng.normal();
  double jump_sum = 0.0;
  for (int j = 0; j < draws.count; ++j) jump_sum += draws.sizes[j];
  x += (theta - comp) * delta + sigma * db + jump_sum;
  if (out) {
    out->brownian_increment = {db};
    for (int j = 0; j < draws.count; ++j)
      out->jumps.push_back({t0 + draws.offsets[j], {draws.sizes[j]}, {draws.sizes[j]}});
  }
}

// Exact transition for the OU model. The Brownian increment and the
// stochastic convolution are drawn jointly so the latent increment has the
// correct conditional law.
inline void exact_interval_ou(const JumpDiffusionModel& model, double theta, double& x,
                              double t0, double delta, RngStream& rng,
                              IntervalLatent* out) {
  if (!(theta > 0.0))
    throw invalid_parameter_error("simulate_grid: exact OU requires theta > 0");
  const IntervalDraws draws = draw_jumps(model, delta, rng);
  const double sigma = model.sigma_const;
  const double mean_jump = model.levy.intensity * model.levy.jump_mean[0];
  const double e1 = std::exp(-theta * delta);
  const double v_conv = (1.0 - e1 * e1) / (2.0 * theta);       // Var int e^{-theta(D-s)} dB
  const double c01 = (1.0 - e1) / theta;                       // Cov(dB, convolution)
  const double db = std::sqrt(delta) * rng.normal();
  const double resid_sd = std::sqrt(std::max(0.0, v_conv - c01 * c01 / delta));
  const double conv = (c01 / delta) * db + resid_sd * rng.normal();
  double jump_part = 0.0;
  for (int j = 0; j < draws.count; ++j)
    jump_part += std::exp(-theta * (delta - draws.offsets[j])) * draws.sizes[j];
  x = e1 * x + sigma * conv + jump_part - mean_jump * c01;
  if (out) {
    out->brownian_increment = {db};
    for (int j = 0; j < draws.count; ++j)
      out->jumps.push_back({t0 + draws.offsets[j], {draws.sizes[j]}, {draws.sizes[j]}});
  }
}

}  // namespace detail

/// Simulates the discrete observation X^n = (X_{t_0}, ..., X_{t_n}) at
/// t_k = k * delta_n under the given parameter. Randomness is keyed by
/// (seed, replication, interval), so identical keys give bit-identical
/// records no matter how many replications run concurrently.
inline ObservationRecord simulate_grid(const JumpDiffusionModel& model, double theta,
                                       std::span<const double> x0,
                                       const ParameterContext& ctx,
                                       const SimulationScheme& scheme, LatentMode latent,
                                       RngKey key) {
  model.validate();
  scheme.validate();
  if (x0.size() != model.dim) throw invalid_parameter_error("simulate_grid: x0 dimension");
  if (scheme.method == SimMethod::exact_closed_form) {
    if (model.closed_form == ClosedForm::none)
      throw invalid_parameter_error("simulate_grid: exact scheme requires a closed-form model");
    if (latent == LatentMode::fine)
      throw unsupported_error("simulate_grid: fine latent data requires the Euler scheme");
  }

  ObservationRecord rec;
  rec.dim = model.dim;
  rec.n = ctx.n;
  rec.delta_n = ctx.delta_n;
  rec.theta_sim = theta;
  rec.x0.assign(x0.begin(), x0.end());
  rec.values.resize((ctx.n + 1) * model.dim);
  std::copy(x0.begin(), x0.end(), rec.values.begin());
  if (latent != LatentMode::none) rec.latent.resize(ctx.n);
  if (latent == LatentMode::fine) rec.fine_substeps = scheme.substeps_per_interval;

  std::vector<double> x(x0.begin(), x0.end());
  for (std::size_t k = 0; k < ctx.n; ++k) {
    RngStream rng = RngStream::for_interval(key.seed, key.replication, k);
    IntervalLatent* out = latent != LatentMode::none ? &rec.latent[k] : nullptr;
    const double t0 = double(k) * ctx.delta_n;
    if (scheme.method == SimMethod::euler) {
      euler_interval(model, theta, x, t0, ctx.delta_n, scheme.substeps_per_interval, latent,
                     rng, out, k);
    } else if (model.closed_form == ClosedForm::additive) {
      detail::exact_interval_additive(model, theta, x[0], t0, ctx.delta_n, rng, out);
    } else {
      detail::exact_interval_ou(model, theta, x[0], t0, ctx.delta_n, rng, out);
    }
    if (!all_finite(x))
      throw simulation_diverged_error("simulate_grid: non-finite state", k);
    std::copy(x.begin(), x.end(), rec.values.begin() + (k + 1) * model.dim);
  }
  return rec;
}

/// Closed-form transition moments over one interval (built-in models).
struct TransitionMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline TransitionMoments analytic_transition_moments(const JumpDiffusionModel& model,
                                                     double theta, double x0, double delta) {
  const double lambda = model.levy.intensity;
  const double ez = model.levy.jump_mean.empty() ? 0.0 : model.levy.jump_mean[0];
  const double ez2 = model.levy.jump_second_moment;
  const double sigma = model.sigma_const;
  TransitionMoments m;
  if (model.closed_form == ClosedForm::additive) {
    m.mean = x0 + theta * delta;
    m.variance = sigma * sigma * delta + lambda * ez2 * delta;
  } else if (model.closed_form == ClosedForm::ou) {
    const double e1 = std::exp(-theta * delta);
    m.mean = e1 * x0;  // compensated jumps have zero mean
    (void)ez;
    m.variance = (sigma * sigma + lambda * ez2) * (1.0 - e1 * e1) / (2.0 * theta);
  } else {
    throw unsupported_error("analytic_transition_moments: closed-form model required");
  }
  return m;
}

struct WeakErrorReport {
  std::size_t replications = 0;
  int substeps = 1;
  double euler_mean = 0.0, euler_var = 0.0;
  double exact_mean = 0.0, exact_var = 0.0;
  double analytic_mean = 0.0, analytic_var = 0.0;
  double mean_discrepancy = 0.0;  // |euler - analytic|
  double var_discrepancy = 0.0;
  double mean_se = 0.0;  // Monte Carlo standard error of the Euler mean
};

/// Weak-error check of the Euler scheme against the exact transition over a
/// single interval of length ctx.delta_n starting from x0.
inline WeakErrorReport euler_vs_exact_check(const JumpDiffusionModel& model, double theta,
                                            double x0, double delta, int substeps,
                                            std::size_t replications, std::uint64_t seed) {
  if (model.closed_form == ClosedForm::none)
    throw precondition_error("euler_vs_exact_check: closed-form model required");
  SimulationScheme euler{SimMethod::euler, substeps};
  SimulationScheme exact{SimMethod::exact_closed_form, 1};

  std::vector<double> xe(replications), xx(replications);
  const std::uint64_t seed_e = derive_seed(seed, 0xE57Aull);
  const std::uint64_t seed_x = derive_seed(seed, 0xE58Bull);
  const double x0v[1] = {x0};
  ParameterContext ctx1(theta, 0.0, 1, delta);
  for (std::size_t r = 0; r < replications; ++r) {
    xe[r] = simulate_grid(model, theta, std::span<const double>(x0v, 1), ctx1, euler,
                          LatentMode::none, {seed_e, r})
                .scalar_state(1);
    xx[r] = simulate_grid(model, theta, std::span<const double>(x0v, 1), ctx1, exact,
                          LatentMode::none, {seed_x, r})
                .scalar_state(1);
  }
  const SampleMoments me = sample_moments(xe);
  const SampleMoments mx = sample_moments(xx);
  const TransitionMoments an = analytic_transition_moments(model, theta, x0, delta);
  WeakErrorReport rep;
  rep.replications = replications;
  rep.substeps = substeps;
  rep.euler_mean = me.mean;
  rep.euler_var = me.variance;
  rep.exact_mean = mx.mean;
  rep.exact_var = mx.variance;
  rep.analytic_mean = an.mean;
  rep.analytic_var = an.variance;
  rep.mean_discrepancy = std::fabs(me.mean - an.mean);
  rep.var_discrepancy = std::fabs(me.variance - an.variance);
  rep.mean_se = std::sqrt(me.variance / double(replications));
  return rep;
}

}  // namespace lanlab
