#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lanlab/experiment.hpp"

namespace lanlab {

namespace detail {

struct CliCommon {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t reps = 0;
  int threads = 0;
};

inline void add_common(CLI::App* cmd, CliCommon& c) {
  cmd->add_option("--config", c.config_path, "JSON experiment config")->required();
  cmd->add_option("--out", c.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", c.seed, "master seed override")->each([&c](const std::string&) {
    c.seed_set = true;
  });
  cmd->add_option("--reps", c.reps, "replication count override");
  cmd->add_option("--threads", c.threads, "worker threads (default: LANLAB_THREADS or hardware)");
}

inline ExperimentConfig load_config(const CliCommon& c) {
  std::ifstream is(c.config_path);
  if (!is) throw validation_error("cannot read config file: " + c.config_path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (c.seed_set) cfg.experiment.seed = c.seed;
  if (c.reps > 0) cfg.experiment.replications = c.reps;
  if (!c.out_dir.empty()) cfg.output.dir = c.out_dir;
  cfg.validate();
  std::filesystem::create_directories(cfg.output.dir);
  return cfg;
}

inline void write_report(const json& j, const std::string& dir) {
  std::ofstream os(std::filesystem::path(dir) / "report.json", std::ios::binary);
  os << j.dump(2) << "\n";
}

}  // namespace detail

/// lanlab <simulate|density|lan|estimate|scaling|tails|probe> --config ...
/// Exit codes: 0 success, 1 validation/usage error, 2 numeric failure.
inline int cli_main(int argc, char** argv) {
  CLI::App app{"lanlab — high-frequency jump-diffusion LAN laboratory"};
  app.require_subcommand(1);

  detail::CliCommon common;
  double density_x = std::numeric_limits<double>::quiet_NaN();
  double density_delta = 0.0;

  CLI::App* cmd_simulate = app.add_subcommand("simulate", "simulate one observed path");
  CLI::App* cmd_density = app.add_subcommand("density", "transition density curve");
  CLI::App* cmd_lan = app.add_subcommand("lan", "LAN law verification experiment");
  CLI::App* cmd_estimate = app.add_subcommand("estimate", "drift estimator normality experiment");
  CLI::App* cmd_scaling = app.add_subcommand("scaling", "remainder moment scaling study");
  CLI::App* cmd_tails = app.add_subcommand("tails", "Poisson tail / jump frequency checks");
  CLI::App* cmd_probe = app.add_subcommand("probe", "randomized hypothesis probes");
  for (CLI::App* c : {cmd_simulate, cmd_density, cmd_lan, cmd_estimate, cmd_scaling,
                      cmd_tails, cmd_probe})
    detail::add_common(c, common);
  cmd_density->add_option("--x", density_x, "initial state (default: model x0)");
  cmd_density->add_option("--delta", density_delta, "interval length (default: grid delta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const auto t_start = std::chrono::steady_clock::now();
  auto runtime = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  try {
    const ExperimentConfig cfg = detail::load_config(common);
    const std::filesystem::path out(cfg.output.dir);

    if (*cmd_simulate) {
      const JumpDiffusionModel model = cfg.build_model();
      const ParameterContext ctx = cfg.context_for(0.0);
      const SimulationScheme scheme =
          model.closed_form != ClosedForm::none
              ? SimulationScheme{SimMethod::exact_closed_form, 1}
              : SimulationScheme{SimMethod::euler, cfg.experiment.substeps};
      const double x0v[1] = {cfg.model.x0};
      const ObservationRecord rec =
          simulate_grid(model, cfg.model.theta0, std::span<const double>(x0v, 1), ctx, scheme,
                        LatentMode::coarse, {cfg.experiment.seed, 0});
      write_observation_csv(rec, (out / "path.csv").string());
      write_latent_sidecar(rec, (out / "path.latent.bin").string());
      json j = {{"config_echo", cfg.to_json()},
                {"seed", cfg.experiment.seed},
                {"statistics", json::array()},
                {"slopes", json::array()},
                {"tails", nullptr},
                {"outputs", {"path.csv", "path.latent.bin"}},
                {"runtime_seconds", runtime()}};
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    if (*cmd_density) {
      const JumpDiffusionModel model = cfg.build_model();
      MixtureDensitySpec spec;
      spec.model = &model;
      const double x = std::isnan(density_x) ? cfg.model.x0 : density_x;
      const double delta = density_delta > 0.0 ? density_delta : cfg.grid.delta_n();
      const TransitionMoments tm =
          analytic_transition_moments(model, cfg.model.theta0, x, delta);
      const double sd = std::sqrt(tm.variance);
      const int npts = 201;
      std::vector<double> ys(npts);
      std::vector<DensityValue> ps(npts);
      for (int i = 0; i < npts; ++i) {
        ys[i] = tm.mean - 6.0 * sd + 12.0 * sd * double(i) / double(npts - 1);
        ps[i] = mixture_density(spec, cfg.model.theta0, delta, x, ys[i]);
      }
      write_density_csv(ys, ps, (out / "density.csv").string());
      json j = {{"config_echo", cfg.to_json()},
                {"seed", cfg.experiment.seed},
                {"statistics", json::array()},
                {"slopes", json::array()},
                {"tails", nullptr},
                {"density", {{"x", x}, {"delta", delta}, {"i_max", spec.i_max(delta)}}},
                {"runtime_seconds", runtime()}};
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    if (*cmd_lan) {
      LanRunResult res = run_lan_experiment(cfg, common.threads);
      for (std::size_t ui = 0; ui < res.rows_per_u.size(); ++ui)
        write_lan_csv(res.rows_per_u[ui],
                      (out / ("lan_u" + std::to_string(ui) + ".csv")).string());
      json j = res.report.to_json();
      j["runtime_seconds"] = runtime();
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    if (*cmd_estimate) {
      const JumpDiffusionModel model = cfg.build_model();
      const ParameterContext ctx = cfg.context_for(0.0);
      const EstimatorExperimentReport er = estimator_normality_experiment(
          model, cfg.model.theta0, ctx, cfg.experiment.replications,
          cfg.experiment.threshold.to_spec(), cfg.experiment.seed, common.threads,
          cfg.model.x0);
      write_estimates_csv(er.results, (out / "estimates.csv").string());
      json stat = {{"name", "sqrt_ndelta_theta_err"},
                   {"u", 0.0},
                   {"available", true},
                   {"count", er.replications - er.solver_failures},
                   {"mean", er.mean_standardized},
                   {"var", er.var_standardized},
                   {"ks", er.ks_to_target},
                   {"ks_skipped", false},
                   {"target_mean", 0.0},
                   {"target_var", er.target_variance},
                   {"gamma", er.gamma},
                   {"gamma_source", "closed_form"}};
      json j = {{"config_echo", cfg.to_json()},
                {"seed", cfg.experiment.seed},
                {"statistics", json::array({stat})},
                {"slopes", json::array()},
                {"tails", nullptr},
                {"solver_failures", er.solver_failures},
                {"runtime_seconds", runtime()}};
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    if (*cmd_scaling) {
      ExperimentReport er = run_scaling_study(cfg, common.threads);
      std::ofstream os(out / "scaling.csv", std::ios::binary);
      os << "component,p,delta,moment\n";
      for (const auto& s : er.slopes)
        for (std::size_t i = 0; i < s.deltas.size(); ++i)
          os << s.component << "," << s.p << "," << format_double(s.deltas[i]) << ","
             << format_double(s.moments[i]) << "\n";
      os.close();
      json j = er.to_json();
      j["runtime_seconds"] = runtime();
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    if (*cmd_tails) {
      ExperimentReport er = run_tail_checks(cfg, common.threads);
      std::ofstream os(out / "tails.csv", std::ios::binary);
      os << "delta,draws,count_ge2,p2_bound,p2_exact,small_one_jump,small_bound,big_jump,"
            "big_fitted_c\n";
      if (er.tails && !er.tails->skipped)
        for (const auto& e : er.tails->entries)
          os << format_double(e.delta) << "," << e.draws << "," << e.count_ge2 << ","
             << format_double(e.p2_bound) << "," << format_double(e.p2_exact) << ","
             << e.small_one_jump << "," << format_double(e.small_bound) << "," << e.big_jump
             << "," << format_double(e.big_fitted_c) << "\n";
      os.close();
      json j = er.to_json();
      j["runtime_seconds"] = runtime();
      detail::write_report(j, cfg.output.dir);
      return 0;
    }

    // probe
    const JumpDiffusionModel model = cfg.build_model();
    const double t0 = cfg.model.theta0;
    Box theta_box{{model.closed_form == ClosedForm::ou ? std::max(0.05, t0 - 2.0) : t0 - 2.0},
                  {t0 + 2.0}};
    Box x_box{{-5.0}, {5.0}};
    Box z_box{{-10.0}, {10.0}};
    const ProbeReport pr =
        probe_assumptions(model, theta_box, x_box, z_box, 1000, cfg.experiment.seed);
    std::size_t psi_pass = 0;
    for (const auto& p : pr.psi_points) psi_pass += p.pass ? 1 : 0;
    json j = {{"config_echo", cfg.to_json()},
              {"seed", cfg.experiment.seed},
              {"statistics", json::array()},
              {"slopes", json::array()},
              {"tails", nullptr},
              {"probe",
               {{"lipschitz_drift", pr.lipschitz_drift},
                {"lipschitz_diffusion", pr.lipschitz_diffusion},
                {"a2_min_eigenvalue", pr.min_diffusion_eig},
                {"a3_min_jump_ratio", pr.min_jump_ratio},
                {"psi_points_total", pr.psi_points.size()},
                {"psi_points_passed", psi_pass},
                {"psi_all_pass", pr.psi_all_pass},
                {"failures", pr.failures}}},
              {"runtime_seconds", runtime()}};
    detail::write_report(j, cfg.output.dir);
    return 0;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const invalid_parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lanlab
