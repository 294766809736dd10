#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lanlab/config.hpp"
#include "lanlab/density.hpp"
#include "lanlab/estimate.hpp"
#include "lanlab/lan.hpp"
#include "lanlab/parallel.hpp"
#include "lanlab/record_io.hpp"
#include "lanlab/simulate.hpp"
#include "lanlab/stats.hpp"

namespace lanlab {

struct StatisticSummary {
  std::string name;
  double u = 0.0;
  bool available = true;  // false when the statistic is undefined for the model
  std::size_t count = 0;
  double mean = 0.0, var = 0.0, ks = 0.0;
  bool ks_skipped = false;  // u = 0 degenerates the target law to a point mass
  double target_mean = 0.0, target_var = 0.0;
  double gamma = 0.0;
  std::string gamma_source;
};

struct SlopeSummary {
  std::string component;
  int p = 2;
  std::vector<double> deltas;
  std::vector<double> moments;  // E|component|^p per delta
  double slope = 0.0;
  double slope_se = 0.0;
  bool degenerate = false;  // component vanishes identically; slope test skipped
};

struct TailCheckEntry {
  double delta = 0.0;
  std::size_t draws = 0;
  // (i) P(N >= 2) <= (lambda delta)^2
  std::size_t count_ge2 = 0;
  double p2_bound = 0.0, p2_exact = 0.0;
  WilsonInterval p2_ci;
  bool p2_pass = false;
  // (ii) P(|Z| < rho1 delta^upsilon, exactly one jump) <= e^{-ld} delta nu(|z|<=r)
  std::size_t small_one_jump = 0;
  double small_bound = 0.0;
  WilsonInterval small_ci;
  bool small_pass = false;
  // (iii) P(|Z| > rho2 delta^{-gamma}, >=1 jump) <= C (lambda delta)^2, C fitted
  std::size_t big_jump = 0;
  double big_fitted_c = 0.0;
  WilsonInterval big_ci;
  double chebyshev_bound = 0.0;
  int chebyshev_kappa = 0;
};

struct TailReport {
  bool skipped = false;  // zero-jump configuration
  std::vector<TailCheckEntry> entries;
};

struct ExperimentReport {
  json config_echo;
  std::uint64_t seed = 0;
  std::vector<StatisticSummary> statistics;
  std::vector<SlopeSummary> slopes;
  std::optional<TailReport> tails;
  double runtime_seconds = 0.0;

  json to_json() const {
    json j;
    j["config_echo"] = config_echo;
    j["seed"] = seed;
    j["statistics"] = json::array();
    for (const auto& s : statistics) {
      json e = {{"name", s.name},       {"u", s.u},
                {"available", s.available}, {"count", s.count},
                {"mean", s.mean},       {"var", s.var},
                {"ks", s.ks},           {"ks_skipped", s.ks_skipped},
                {"target_mean", s.target_mean}, {"target_var", s.target_var},
                {"gamma", s.gamma},     {"gamma_source", s.gamma_source}};
      j["statistics"].push_back(e);
    }
    j["slopes"] = json::array();
    for (const auto& s : slopes) {
      j["slopes"].push_back({{"component", s.component},
                             {"p", s.p},
                             {"deltas", s.deltas},
                             {"moments", s.moments},
                             {"slope", s.slope},
                             {"slope_se", s.slope_se},
                             {"degenerate", s.degenerate}});
    }
    if (tails) {
      json t;
      t["skipped"] = tails->skipped;
      t["entries"] = json::array();
      for (const auto& e : tails->entries) {
        t["entries"].push_back(
            {{"delta", e.delta},
             {"draws", e.draws},
             {"count_ge2", e.count_ge2},
             {"p2_bound", e.p2_bound},
             {"p2_exact", e.p2_exact},
             {"p2_ci", {e.p2_ci.lower, e.p2_ci.upper}},
             {"p2_pass", e.p2_pass},
             {"small_one_jump", e.small_one_jump},
             {"small_bound", e.small_bound},
             {"small_ci", {e.small_ci.lower, e.small_ci.upper}},
             {"small_pass", e.small_pass},
             {"big_jump", e.big_jump},
             {"big_fitted_c", e.big_fitted_c},
             {"big_ci", {e.big_ci.lower, e.big_ci.upper}},
             {"chebyshev_bound", e.chebyshev_bound},
             {"chebyshev_kappa", e.chebyshev_kappa}});
      }
      j["tails"] = t;
    } else {
      j["tails"] = nullptr;
    }
    j["runtime_seconds"] = runtime_seconds;
    return j;
  }
};

/// Gamma with source bookkeeping: closed form when the model has one, else an
/// ergodic average over an auxiliary path with horizon >= 200.
inline std::pair<FisherInfo, std::string> gamma_with_source(const JumpDiffusionModel& model,
                                                            double theta0,
                                                            std::uint64_t seed) {
  try {
    return {fisher_closed_form(model, theta0), "closed_form"};
  } catch (const precondition_error&) {
    const double delta = 0.01;
    const std::size_t n = 20000;  // horizon 200
    ParameterContext ctx(theta0, 0.0, n, delta);
    const double x0[1] = {0.0};
    const ObservationRecord rec =
        simulate_grid(model, theta0, std::span<const double>(x0, 1), ctx,
                      {SimMethod::euler, 8}, LatentMode::none, {derive_seed(seed, 0xAA11ull), 0});
    return {fisher_ergodic(rec, model, theta0), "ergodic_average"};
  }
}

struct LanRow {
  std::size_t rep = 0;
  double exact = std::numeric_limits<double>::quiet_NaN();
  double quasi = std::numeric_limits<double>::quiet_NaN();
  double main = std::numeric_limits<double>::quiet_NaN();
  double r[6] = {std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()};
};

struct LanRunResult {
  ExperimentReport report;
  std::vector<std::vector<LanRow>> rows_per_u;
};

/// Simulates `replications` paths under theta0 for every u, computes the
/// requested statistics, and compares each empirical law to the LAN target
/// N(-u^2 Gamma / 2, u^2 Gamma).
inline LanRunResult run_lan_experiment(const ExperimentConfig& cfg, int threads = 0) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const JumpDiffusionModel model = cfg.build_model();
  const auto& ex = cfg.experiment;

  auto want = [&](const char* s) {
    return std::find(ex.statistics.begin(), ex.statistics.end(), s) != ex.statistics.end();
  };
  const bool want_exact = want("exact");
  const bool want_quasi = want("quasi");
  const bool want_main = want("main");
  const bool want_rem = want("remainders");
  const bool exact_available = model.closed_form == ClosedForm::additive;

  const bool need_fine = want_rem;
  const LatentMode latent =
      need_fine ? LatentMode::fine : (want_main ? LatentMode::coarse : LatentMode::none);
  SimulationScheme scheme;
  if (need_fine || model.closed_form == ClosedForm::none) {
    scheme = {SimMethod::euler, need_fine ? 64 : ex.substeps};
  } else {
    scheme = {SimMethod::exact_closed_form, 1};
  }

  const auto [gamma_info, gamma_source] =
      gamma_with_source(model, cfg.model.theta0, ex.seed);
  const double gamma = gamma_info.gamma;

  MixtureDensitySpec mix;
  mix.model = &model;

  LanRunResult out;
  out.report.config_echo = cfg.to_json();
  out.report.seed = ex.seed;

  const int nthreads = resolve_thread_count(threads);
  for (std::size_t ui = 0; ui < ex.u.size(); ++ui) {
    const double u = ex.u[ui];
    const ParameterContext ctx = cfg.context_for(u);
    const std::optional<double> thr = ex.threshold.to_spec().resolve(model, ctx.delta_n);
    const std::uint64_t seed_u = derive_seed(ex.seed, 0x1A00ull + ui);

    auto rows = parallel_map_indexed<LanRow>(ex.replications, nthreads, [&](std::size_t rep) {
      LanRow row;
      row.rep = rep;
      const double x0v[1] = {cfg.model.x0};
      const ObservationRecord rec = simulate_grid(
          model, ctx.theta0, std::span<const double>(x0v, 1), ctx, scheme, latent,
          {seed_u, rep});
      if (want_main) row.main = main_term_sum(rec, model, ctx);
      if (want_quasi) row.quasi = quasi_llr(rec, model, ctx, thr);
      if (want_exact && exact_available) row.exact = exact_llr(rec, mix, ctx);
      if (want_rem) {
        double sums[6] = {0, 0, 0, 0, 0, 0};
        bool have123 = true;
        for (std::size_t k = 0; k < rec.n; ++k) {
          const RemainderComponents rc = remainder_components(rec, model, ctx.theta0, k);
          if (rc.r1 && rc.r2 && rc.r3) {
            sums[0] += *rc.r1;
            sums[1] += *rc.r2;
            sums[2] += *rc.r3;
          } else {
            have123 = false;
          }
          sums[3] += rc.r4;
          sums[4] += rc.r5;
          sums[5] += rc.r6;
        }
        for (int i = 0; i < 6; ++i)
          row.r[i] = (i < 3 && !have123) ? std::numeric_limits<double>::quiet_NaN() : sums[i];
      }
      return row;
    });

    auto summarize = [&](const char* name, auto getter, bool available) {
      StatisticSummary s;
      s.name = name;
      s.u = u;
      s.available = available;
      s.gamma = gamma;
      s.gamma_source = gamma_source;
      s.target_mean = -0.5 * u * u * gamma;
      s.target_var = u * u * gamma;
      if (available) {
        std::vector<double> vals;
        vals.reserve(rows.size());
        for (const auto& r : rows) vals.push_back(getter(r));
        const SampleMoments m = sample_moments(vals);
        s.count = m.count;
        s.mean = m.mean;
        s.var = m.variance;
        if (u == 0.0) {
          s.ks_skipped = true;  // target degenerates to a point mass
        } else {
          s.ks = ks_to_normal(vals, s.target_mean, s.target_var);
        }
      }
      out.report.statistics.push_back(std::move(s));
    };
    if (want_exact) summarize("exact_llr", [](const LanRow& r) { return r.exact; }, exact_available);
    if (want_quasi) summarize("quasi_llr", [](const LanRow& r) { return r.quasi; }, true);
    if (want_main) summarize("main_term", [](const LanRow& r) { return r.main; }, true);
    out.rows_per_u.push_back(std::move(rows));
  }

  out.report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

/// Streams `intervals` consecutive intervals of a single path per delta and
/// accumulates Monte Carlo moments of the remainder components, then fits
/// log-log slopes against delta.
inline ExperimentReport run_scaling_study(const ExperimentConfig& cfg, int threads = 0) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const JumpDiffusionModel model = cfg.build_model();
  if (model.closed_form == ClosedForm::none)
    throw validation_error("run_scaling_study: closed-form model required");
  const auto& sc = cfg.experiment.scaling;
  if (sc.deltas.size() < 3)
    throw validation_error("run_scaling_study: need at least 3 deltas",
                           {"experiment.scaling.deltas"});

  const std::vector<std::string> components = {"neg_r1_plus_r2_plus_r3", "r4", "r6",
                                               "z4", "z5", "z6"};
  struct DeltaMoments {
    // moments[component][p-index]
    std::vector<std::vector<double>> sums;
    std::size_t count = 0;
  };

  auto run_delta = [&](std::size_t di) {
    const double delta = sc.deltas[di];
    DeltaMoments dm;
    dm.sums.assign(components.size(), std::vector<double>(sc.p.size(), 0.0));
    const std::uint64_t seed_d = derive_seed(cfg.experiment.seed, 0x5CA1ull + di);
    double x = cfg.model.x0;
    IntervalLatent lat;
    std::vector<double> xbuf{x};
    for (std::size_t k = 0; k < sc.intervals; ++k) {
      lat = IntervalLatent{};
      RngStream rng = RngStream::for_interval(seed_d, 0, k);
      xbuf[0] = x;
      euler_interval(model, cfg.model.theta0, xbuf, double(k) * delta, delta, sc.substeps,
                     LatentMode::fine, rng, &lat, k);
      const RemainderComponents rc = remainder_components_interval(
          model, cfg.model.theta0, cfg.model.theta0, x, lat, delta, sc.substeps);
      const double vals[6] = {
          rc.r1 ? rc.centered_r123() : std::numeric_limits<double>::quiet_NaN(),
          rc.r4, rc.r6, rc.z4, rc.z5, rc.z6};
      for (std::size_t c = 0; c < components.size(); ++c)
        for (std::size_t pi = 0; pi < sc.p.size(); ++pi)
          dm.sums[c][pi] += std::pow(std::fabs(vals[c]), double(sc.p[pi]));
      ++dm.count;
      x = xbuf[0];
    }
    return dm;
  };

  const auto per_delta = parallel_map_indexed<DeltaMoments>(
      sc.deltas.size(), std::min<int>(resolve_thread_count(threads), int(sc.deltas.size())),
      run_delta);

  ExperimentReport rep;
  rep.config_echo = cfg.to_json();
  rep.seed = cfg.experiment.seed;
  for (std::size_t pi = 0; pi < sc.p.size(); ++pi) {
    for (std::size_t c = 0; c < components.size(); ++c) {
      SlopeSummary s;
      s.component = components[c];
      s.p = sc.p[pi];
      s.deltas = sc.deltas;
      bool degenerate = false;
      for (std::size_t di = 0; di < sc.deltas.size(); ++di) {
        const double m = per_delta[di].sums[c][pi] / double(per_delta[di].count);
        s.moments.push_back(m);
        if (!(m > 0.0) || !std::isfinite(m)) degenerate = true;
      }
      s.degenerate = degenerate;
      if (!degenerate) {
        std::vector<double> xs, ys;
        for (std::size_t di = 0; di < sc.deltas.size(); ++di) {
          xs.push_back(std::log(sc.deltas[di]));
          ys.push_back(std::log(s.moments[di]));
        }
        const OlsFit f = ols_fit(xs, ys);
        s.slope = f.slope;
        s.slope_se = f.slope_se;
      }
      rep.slopes.push_back(std::move(s));
    }
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

/// Monte Carlo Poisson-tail and small/large-jump frequency checks behind the
/// large-deviation lemma, with Wilson confidence intervals.
inline ExperimentReport run_tail_checks(const ExperimentConfig& cfg, int threads = 0) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const JumpDiffusionModel model = cfg.build_model();
  const auto& tc = cfg.experiment.tails;
  const double lambda = model.levy.intensity;

  ExperimentReport rep;
  rep.config_echo = cfg.to_json();
  rep.seed = cfg.experiment.seed;
  TailReport tails;
  if (lambda <= 0.0) {
    tails.skipped = true;
    rep.tails = tails;
    return rep;
  }

  const int kappa = int(std::floor(1.0 / tc.gamma)) + 1;  // gamma*kappa + 1 > 2
  constexpr std::size_t kChunk = 1 << 16;
  const double wilson_z = 3.2905267314919255;  // 99.9% two-sided

  for (std::size_t di = 0; di < tc.deltas.size(); ++di) {
    const double delta = tc.deltas[di];
    const double r_small = tc.rho1 * std::pow(delta, tc.upsilon);
    const double r_big = tc.rho2 * std::pow(delta, -tc.gamma);
    const std::size_t n_chunks = (tc.draws + kChunk - 1) / kChunk;
    const std::uint64_t seed_d = derive_seed(cfg.experiment.seed, 0x7A11ull + di);

    struct ChunkCounts {
      std::size_t ge2 = 0, small1 = 0, big = 0, draws = 0;
      double abs_pow_sum = 0.0;
    };
    auto chunk_fn = [&](std::size_t ci) {
      ChunkCounts cc;
      RngStream rng(seed_d, ci);
      const std::size_t lo = ci * kChunk;
      const std::size_t hi = std::min(tc.draws, lo + kChunk);
      std::vector<double> z(1);
      for (std::size_t i = lo; i < hi; ++i) {
        const int count = rng.poisson(lambda * delta);
        ++cc.draws;
        if (count >= 2) ++cc.ge2;
        if (count >= 1) {
          double zsum = 0.0;
          double first = 0.0;
          for (int j = 0; j < count; ++j) {
            model.levy.jump_sampler(rng, z);
            zsum += z[0];
            if (j == 0) first = z[0];
          }
          if (count == 1 && std::fabs(first) < r_small) ++cc.small1;
          if (std::fabs(zsum) > r_big) ++cc.big;
          cc.abs_pow_sum += std::pow(std::fabs(zsum), double(kappa));
        }
      }
      return cc;
    };
    const auto chunks =
        parallel_map_indexed<ChunkCounts>(n_chunks, resolve_thread_count(threads), chunk_fn);

    TailCheckEntry e;
    e.delta = delta;
    double abs_pow = 0.0;
    for (const auto& cc : chunks) {
      e.draws += cc.draws;
      e.count_ge2 += cc.ge2;
      e.small_one_jump += cc.small1;
      e.big_jump += cc.big;
      abs_pow += cc.abs_pow_sum;
    }
    const double ld = lambda * delta;
    e.p2_bound = ld * ld;
    e.p2_exact = 1.0 - std::exp(-ld) * (1.0 + ld);
    e.p2_ci = wilson_interval(e.count_ge2, e.draws, wilson_z);
    e.p2_pass = e.p2_ci.lower <= e.p2_bound && e.p2_ci.lower <= e.p2_exact &&
                e.p2_exact <= e.p2_ci.upper;
    e.small_bound = std::exp(-ld) * delta * model.levy.small_ball_mass(r_small);
    e.small_ci = wilson_interval(e.small_one_jump, e.draws, wilson_z);
    e.small_pass = e.small_ci.lower <= e.small_bound + 1e-12;
    e.big_ci = wilson_interval(e.big_jump, e.draws, wilson_z);
    e.big_fitted_c = e.big_ci.upper / (ld * ld);
    e.chebyshev_kappa = kappa;
    e.chebyshev_bound = (abs_pow / double(e.draws)) * std::pow(delta, tc.gamma * kappa) /
                        std::pow(tc.rho2, kappa);
    tails.entries.push_back(e);
  }
  rep.tails = tails;
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

// ---- CSV emission -------------------------------------------------------

inline void write_lan_csv(const std::vector<LanRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("write_lan_csv: cannot open " + path);
  os << "rep,exact_llr,quasi_llr,main_term,r1,r2,r3,r4,r5,r6\n";
  for (const auto& r : rows) {
    os << r.rep << "," << format_double(r.exact) << "," << format_double(r.quasi) << ","
       << format_double(r.main);
    for (int i = 0; i < 6; ++i) os << "," << format_double(r.r[i]);
    os << "\n";
  }
}

inline void write_estimates_csv(const std::vector<EstimateResult>& results,
                                const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("write_estimates_csv: cannot open " + path);
  os << "rep,theta_hat,standardized,converged,filtered_fraction\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    os << i << "," << format_double(r.theta_hat) << ","
       << format_double(r.standardized ? *r.standardized
                                       : std::numeric_limits<double>::quiet_NaN())
       << "," << (r.converged ? 1 : 0) << "," << format_double(r.filtered_fraction) << "\n";
  }
}

inline void write_density_csv(const std::vector<double>& ys,
                              const std::vector<DensityValue>& ps, const std::string& path) {
  if (ys.size() != ps.size()) throw precondition_error("write_density_csv: size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("write_density_csv: cannot open " + path);
  os << "y,p,truncation_error\n";
  for (std::size_t i = 0; i < ys.size(); ++i)
    os << format_double(ys[i]) << "," << format_double(ps[i].value) << ","
       << format_double(ps[i].truncation_error) << "\n";
}

}  // namespace lanlab
