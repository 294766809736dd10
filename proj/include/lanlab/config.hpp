#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanlab/core.hpp"
#include "lanlab/estimate.hpp"
#include "lanlab/model.hpp"

namespace lanlab {

using json = nlohmann::json;

struct JumpLawConfig {
  std::string type = "gaussian";  // gaussian | class1 | class2 | class3 | class4
  double mean = 0.0, sd = 1.0;    // gaussian
  double support_radius = 1.0;    // class1
  double alpha = -1.0;            // class2
  double c1 = 1.0, c2 = 1.0, kappa = 0.0;  // class3 / class4
  double a = 1.0, b = 1.0;                 // class4 gamma tail
};

struct ModelConfig {
  std::string kind = "ou";  // ou | additive
  double theta0 = 1.0;
  double sigma = 1.0;
  double lambda = 1.0;  // used by gaussian/class1 laws; classes 2-4 have intrinsic mass
  double x0 = 0.0;
  JumpLawConfig jump_law;
};

struct GridConfig {
  std::size_t n = 10000;
  std::string delta_rule = "power";  // power: delta = n^-beta | explicit
  double beta = 0.6;
  double delta = 0.01;

  double delta_n() const {
    return delta_rule == "power" ? std::pow(double(n), -beta) : delta;
  }
};

struct ThresholdConfig {
  std::string policy = "four_sigma";  // four_sigma | none | fixed
  double value = 0.0;

  ThresholdSpec to_spec() const {
    if (policy == "none") return {ThresholdPolicy::none, 0.0};
    if (policy == "fixed") return {ThresholdPolicy::fixed, value};
    return {ThresholdPolicy::four_sigma_sqrt_delta, 0.0};
  }
};

struct TailConfig {
  double rho1 = 1.0, rho2 = 1.0;
  double upsilon = 0.4, gamma = 0.1;  // conventions; the theory only needs (0, 1/2)
  std::size_t draws = 10000000;
  std::vector<double> deltas = {0.01, 0.001};
};

struct ScalingConfig {
  std::vector<double> deltas = {0.1, 0.05, 0.025};
  std::size_t intervals = 100000;
  std::vector<int> p = {2};
  int substeps = 64;
};

struct ExperimentBlock {
  std::vector<double> u = {1.0};
  std::size_t replications = 2000;
  std::vector<std::string> statistics = {"quasi", "main"};
  std::uint64_t seed = 1;
  ThresholdConfig threshold;
  TailConfig tails;
  ScalingConfig scaling;
  int substeps = 8;  // Euler substeps when an exact scheme is unavailable
};

struct OutputConfig {
  std::string dir = "out";
};

struct ExperimentConfig {
  ModelConfig model;
  GridConfig grid;
  ExperimentBlock experiment;
  OutputConfig output;

  void validate() const {
    std::vector<std::string> bad;
    if (model.kind != "ou" && model.kind != "additive") bad.push_back("model.kind");
    if (!(model.sigma > 0.0)) bad.push_back("model.sigma");
    if (model.lambda < 0.0) bad.push_back("model.lambda");
    if (model.kind == "ou" && !(model.theta0 > 0.0)) bad.push_back("model.theta0");
    const std::string& jt = model.jump_law.type;
    if (jt != "gaussian" && jt != "class1" && jt != "class2" && jt != "class3" &&
        jt != "class4")
      bad.push_back("model.jump_law.type");
    if (jt == "class2" && !(model.jump_law.alpha < 0.0)) bad.push_back("model.jump_law.alpha");
    if ((jt == "class3" || jt == "class4") && !(model.jump_law.kappa > -1.0))
      bad.push_back("model.jump_law.kappa");
    if (grid.n < 1) bad.push_back("grid.n");
    if (grid.delta_rule == "power") {
      if (!(grid.beta > 0.0 && grid.beta < 1.0)) bad.push_back("grid.beta");
    } else if (grid.delta_rule == "explicit") {
      if (!(grid.delta > 0.0 && grid.delta <= 1.0)) bad.push_back("grid.delta");
    } else {
      bad.push_back("grid.delta_rule");
    }
    if (grid.delta_n() > 1.0) bad.push_back("grid.delta");
    if (experiment.replications < 1) bad.push_back("experiment.replications");
    for (const auto& s : experiment.statistics)
      if (s != "exact" && s != "quasi" && s != "main" && s != "remainders")
        bad.push_back("experiment.statistics:" + s);
    const std::string& tp = experiment.threshold.policy;
    if (tp != "four_sigma" && tp != "none" && tp != "fixed")
      bad.push_back("experiment.threshold.policy");
    if (experiment.substeps < 1) bad.push_back("experiment.substeps");
    if (experiment.scaling.deltas.size() < 3) bad.push_back("experiment.scaling.deltas");
    if (experiment.scaling.substeps < 1) bad.push_back("experiment.scaling.substeps");
    if (!(experiment.tails.upsilon > 0.0 && experiment.tails.upsilon < 0.5))
      bad.push_back("experiment.tails.upsilon");
    if (!(experiment.tails.gamma > 0.0 && experiment.tails.gamma < 0.5))
      bad.push_back("experiment.tails.gamma");
    if (!bad.empty()) {
      std::string msg = "invalid config fields:";
      for (const auto& f : bad) msg += " " + f;
      throw validation_error(msg, bad);
    }
  }

  LevySpec build_jump_law() const {
    const JumpLawConfig& j = model.jump_law;
    if (model.lambda == 0.0 && (j.type == "gaussian" || j.type == "class1"))
      return zero_jump_law();
    if (j.type == "gaussian") return gaussian_jump_law(model.lambda, j.mean, j.sd);
    if (j.type == "class1") return class1_jump_law(model.lambda, j.support_radius);
    if (j.type == "class2") return class2_jump_law(j.alpha);
    if (j.type == "class3") return class3_jump_law(j.c1, j.c2, j.kappa);
    return class4_jump_law(j.c1, j.c2, j.kappa, j.a, j.b);
  }

  JumpDiffusionModel build_model() const {
    return make_builtin_model(
        model.kind == "ou" ? BuiltinKind::ou : BuiltinKind::additive, model.sigma,
        build_jump_law());
  }

  ParameterContext context_for(double u) const {
    return ParameterContext(model.theta0, u, grid.n, grid.delta_n());
  }

  json to_json() const {
    json j;
    j["model"] = {{"kind", model.kind},     {"theta0", model.theta0},
                  {"sigma", model.sigma},   {"lambda", model.lambda},
                  {"x0", model.x0}};
    json law = {{"type", model.jump_law.type}};
    if (model.jump_law.type == "gaussian") {
      law["mean"] = model.jump_law.mean;
      law["sd"] = model.jump_law.sd;
    } else if (model.jump_law.type == "class1") {
      law["support_radius"] = model.jump_law.support_radius;
    } else if (model.jump_law.type == "class2") {
      law["alpha"] = model.jump_law.alpha;
    } else {
      law["c1"] = model.jump_law.c1;
      law["c2"] = model.jump_law.c2;
      law["kappa"] = model.jump_law.kappa;
      if (model.jump_law.type == "class4") {
        law["a"] = model.jump_law.a;
        law["b"] = model.jump_law.b;
      }
    }
    j["model"]["jump_law"] = law;
    json grid_j = {{"n", grid.n}};
    if (grid.delta_rule == "power")
      grid_j["delta_rule"] = {{"type", "power"}, {"beta", grid.beta}};
    else
      grid_j["delta_rule"] = {{"type", "explicit"}, {"delta", grid.delta}};
    j["grid"] = grid_j;
    json thr = {{"policy", experiment.threshold.policy}};
    if (experiment.threshold.policy == "fixed") thr["value"] = experiment.threshold.value;
    j["experiment"] = {{"u", experiment.u},
                       {"replications", experiment.replications},
                       {"statistics", experiment.statistics},
                       {"seed", experiment.seed},
                       {"threshold", thr},
                       {"substeps", experiment.substeps},
                       {"tails",
                        {{"rho1", experiment.tails.rho1},
                         {"rho2", experiment.tails.rho2},
                         {"upsilon", experiment.tails.upsilon},
                         {"gamma", experiment.tails.gamma},
                         {"draws", experiment.tails.draws},
                         {"deltas", experiment.tails.deltas}}},
                       {"scaling",
                        {{"deltas", experiment.scaling.deltas},
                         {"intervals", experiment.scaling.intervals},
                         {"p", experiment.scaling.p},
                         {"substeps", experiment.scaling.substeps}}}};
    j["output"] = {{"dir", output.dir}};
    return j;
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("model")) {
      const json& m = j.at("model");
      c.model.kind = m.value("kind", c.model.kind);
      c.model.theta0 = m.value("theta0", c.model.theta0);
      c.model.sigma = m.value("sigma", c.model.sigma);
      c.model.lambda = m.value("lambda", c.model.lambda);
      c.model.x0 = m.value("x0", c.model.x0);
      if (m.contains("jump_law")) {
        const json& l = m.at("jump_law");
        c.model.jump_law.type = l.value("type", c.model.jump_law.type);
        c.model.jump_law.mean = l.value("mean", c.model.jump_law.mean);
        c.model.jump_law.sd = l.value("sd", c.model.jump_law.sd);
        c.model.jump_law.support_radius =
            l.value("support_radius", c.model.jump_law.support_radius);
        c.model.jump_law.alpha = l.value("alpha", c.model.jump_law.alpha);
        c.model.jump_law.c1 = l.value("c1", c.model.jump_law.c1);
        c.model.jump_law.c2 = l.value("c2", c.model.jump_law.c2);
        c.model.jump_law.kappa = l.value("kappa", c.model.jump_law.kappa);
        c.model.jump_law.a = l.value("a", c.model.jump_law.a);
        c.model.jump_law.b = l.value("b", c.model.jump_law.b);
      }
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      c.grid.n = g.value("n", c.grid.n);
      if (g.contains("delta_rule")) {
        const json& r = g.at("delta_rule");
        c.grid.delta_rule = r.value("type", c.grid.delta_rule);
        c.grid.beta = r.value("beta", c.grid.beta);
        c.grid.delta = r.value("delta", c.grid.delta);
      }
    }
    if (j.contains("experiment")) {
      const json& e = j.at("experiment");
      if (e.contains("u")) c.experiment.u = e.at("u").get<std::vector<double>>();
      c.experiment.replications = e.value("replications", c.experiment.replications);
      if (e.contains("statistics"))
        c.experiment.statistics = e.at("statistics").get<std::vector<std::string>>();
      c.experiment.seed = e.value("seed", c.experiment.seed);
      c.experiment.substeps = e.value("substeps", c.experiment.substeps);
      if (e.contains("threshold")) {
        c.experiment.threshold.policy =
            e.at("threshold").value("policy", c.experiment.threshold.policy);
        c.experiment.threshold.value =
            e.at("threshold").value("value", c.experiment.threshold.value);
      }
      if (e.contains("tails")) {
        const json& t = e.at("tails");
        c.experiment.tails.rho1 = t.value("rho1", c.experiment.tails.rho1);
        c.experiment.tails.rho2 = t.value("rho2", c.experiment.tails.rho2);
        c.experiment.tails.upsilon = t.value("upsilon", c.experiment.tails.upsilon);
        c.experiment.tails.gamma = t.value("gamma", c.experiment.tails.gamma);
        c.experiment.tails.draws = t.value("draws", c.experiment.tails.draws);
        if (t.contains("deltas"))
          c.experiment.tails.deltas = t.at("deltas").get<std::vector<double>>();
      }
      if (e.contains("scaling")) {
        const json& s = e.at("scaling");
        if (s.contains("deltas"))
          c.experiment.scaling.deltas = s.at("deltas").get<std::vector<double>>();
        c.experiment.scaling.intervals = s.value("intervals", c.experiment.scaling.intervals);
        if (s.contains("p")) c.experiment.scaling.p = s.at("p").get<std::vector<int>>();
        c.experiment.scaling.substeps = s.value("substeps", c.experiment.scaling.substeps);
      }
    }
    if (j.contains("output")) c.output.dir = j.at("output").value("dir", c.output.dir);
    return c;
  }
};

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.to_json() == b.to_json();
}

}  // namespace lanlab
