#include <doctest.h>

#include <cmath>

#include "lanlab/model.hpp"
#include "lanlab/quadrature.hpp"

using namespace lanlab;

namespace {

double drift1(const JumpDiffusionModel& m, double theta, double x) {
  const double xv[1] = {x};
  double out[1];
  m.drift(theta, std::span<const double>(xv, 1), out);
  return out[0];
}

double compensator1(const JumpDiffusionModel& m, double x) {
  const double xv[1] = {x};
  double out[1];
  m.jump_compensator(std::span<const double>(xv, 1), out);
  return out[0];
}

}  // namespace

TEST_CASE("builtin additive model without jumps") {
  const JumpDiffusionModel m = make_builtin_model(BuiltinKind::additive, 1.0, zero_jump_law());
  CHECK(m.dim == 1);
  CHECK(m.closed_form == ClosedForm::additive);
  CHECK(drift1(m, 0.7, 3.0) == doctest::Approx(0.7));
  CHECK(compensator1(m, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("builtin OU model with centered Gaussian jumps has zero compensator") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  CHECK(drift1(m, 2.0, 3.0) == doctest::Approx(-6.0));
  CHECK(compensator1(m, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("compensator equals lambda times mean jump") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 2.0, gaussian_jump_law(0.5, 1.0, 1.0));
  CHECK(compensator1(m, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("nonpositive sigma is rejected") {
  CHECK_THROWS_AS(make_builtin_model(BuiltinKind::additive, 0.0, zero_jump_law()),
                  invalid_parameter_error);
  CHECK_THROWS_AS(make_builtin_model(BuiltinKind::ou, -1.0, zero_jump_law()),
                  invalid_parameter_error);
}

TEST_CASE("small-ball closed forms match the examples") {
  JumpClassParams p;
  p.support_radius = 1.0;
  CHECK(small_ball_mass_closed_form(JumpClass::support_away_from_zero, p, 0.5) == 0.0);

  p.alpha = -1.0;
  CHECK(small_ball_mass_closed_form(JumpClass::power_kappa, p, 0.1) ==
        doctest::Approx(0.2).epsilon(1e-14));

  p.c2 = 1.0;
  p.kappa = 0.0;
  CHECK(small_ball_mass_closed_form(JumpClass::gaussian_plus_power, p, 0.2) ==
        doctest::Approx(0.4).epsilon(1e-14));

  CHECK_THROWS_AS(small_ball_mass_closed_form(JumpClass::power_kappa, p, -0.1),
                  std::domain_error);
  CHECK_THROWS_AS(small_ball_mass_closed_form(JumpClass::custom, p, 0.1), unsupported_error);
}

TEST_CASE("small-ball closed forms agree with quadrature of the density") {
  // nu(dz) = |z|^{-1-alpha} on [-1,1] and C2 |z|^kappa on [-1,1]
  auto integrate = [](auto f, double r) {
    const QuadRule q = gauss_legendre(200).mapped_to(0.0, r);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * f(q.nodes[i]);
    return 2.0 * s;  // symmetric
  };
  JumpClassParams p;
  p.alpha = -2.0;  // integrand |z|^{-1-alpha} = |z| is polynomial on the ball
  const double r = 0.3;
  CHECK(small_ball_mass_closed_form(JumpClass::power_kappa, p, r) ==
        doctest::Approx(integrate([&](double z) { return std::pow(z, -1.0 - p.alpha); }, r))
            .epsilon(1e-8));
  p.c2 = 0.7;
  p.kappa = 1.5;
  CHECK(small_ball_mass_closed_form(JumpClass::gaussian_plus_power, p, r) ==
        doctest::Approx(integrate([&](double z) { return p.c2 * std::pow(z, p.kappa); }, r))
            .epsilon(1e-8));
}

TEST_CASE("levy spec samplers match their stated moments") {
  struct Case {
    LevySpec spec;
    const char* name;
  };
  const Case cases[] = {
      {gaussian_jump_law(1.0, 0.5, 2.0), "gaussian"},
      {class1_jump_law(1.0, 1.0), "class1"},
      {class2_jump_law(-1.0), "class2"},
      {class3_jump_law(1.0, 1.0, 0.5), "class3"},
      {class4_jump_law(1.0, 1.0, 0.0, 1.0, 2.0), "class4"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    RngStream rng(1234, 0);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    std::vector<double> z(1);
    for (int i = 0; i < n; ++i) {
      c.spec.jump_sampler(rng, z);
      s1 += z[0];
      s2 += z[0] * z[0];
    }
    CHECK(s1 / n == doctest::Approx(c.spec.jump_mean[0]).epsilon(0.05).scale(1.0));
    CHECK(s2 / n == doctest::Approx(c.spec.jump_second_moment).epsilon(0.05));
  }
}

TEST_CASE("levy small-ball mass is consistent with sampled frequencies") {
  const LevySpec spec = class3_jump_law(1.0, 1.0, 0.0);
  RngStream rng(777, 0);
  const int n = 200000;
  std::vector<double> z(1);
  int inside = 0;
  const double r = 0.5;
  for (int i = 0; i < n; ++i) {
    spec.jump_sampler(rng, z);
    inside += std::fabs(z[0]) <= r;
  }
  const double mu_mass = spec.small_ball_mass(r) / spec.intensity;
  CHECK(double(inside) / n == doctest::Approx(mu_mass).epsilon(0.05));
  CHECK(spec.small_ball_mass(1e9) == doctest::Approx(spec.intensity).epsilon(1e-6));
}

TEST_CASE("A7: small-ball mass at rho1 * delta^upsilon is nonincreasing in n") {
  const LevySpec specs[] = {class2_jump_law(-1.0), class3_jump_law(1.0, 1.0, 0.0),
                            class4_jump_law(1.0, 1.0, 0.0, 1.0, 1.0)};
  const double beta = 0.5, upsilon = 0.4, rho1 = 1.0;
  for (const auto& spec : specs) {
    double prev = std::numeric_limits<double>::infinity();
    for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
      const double delta = std::pow(n, -beta);
      const double mass = spec.small_ball_mass(rho1 * std::pow(delta, upsilon));
      CHECK(mass <= prev + 1e-15);
      prev = mass;
    }
    CHECK(prev < 0.5 * spec.intensity);
  }
  // class 1: identically zero once the radius drops below the support
  const LevySpec c1 = class1_jump_law(1.0, 1.0);
  const double delta = std::pow(10000.0, -beta);
  CHECK(c1.small_ball_mass(rho1 * std::pow(delta, upsilon)) == 0.0);
}

TEST_CASE("probes report exact constants for the builtin models") {
  const Box theta_box{{0.1}, {2.0}};
  const Box x_box{{-5.0}, {5.0}};
  const Box z_box{{-10.0}, {10.0}};
  for (BuiltinKind kind : {BuiltinKind::additive, BuiltinKind::ou}) {
    const double sigma = kind == BuiltinKind::additive ? 2.0 : 1.0;
    const JumpDiffusionModel m =
        make_builtin_model(kind, sigma, gaussian_jump_law(1.0, 0.0, 1.0));
    const ProbeReport rep = probe_assumptions(m, theta_box, x_box, z_box, 500, 5);
    CHECK(rep.min_diffusion_eig == doctest::Approx(sigma * sigma).epsilon(1e-14));
    CHECK(rep.min_jump_ratio == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.failures.empty());
    CHECK(rep.psi_all_pass);
    CHECK(rep.psi_points.size() == 199 * 21);
  }
}

TEST_CASE("psi derivative bounds collapse to equality at z = 0") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 1.0, zero_jump_law());
  const ProbeReport rep =
      probe_assumptions(m, Box{{-1.0}, {1.0}}, Box{{-5.0}, {5.0}}, Box{{-10.0}, {10.0}}, 10, 1);
  for (const auto& pt : rep.psi_points) {
    if (pt.z == 0.0) {
      CHECK(pt.lower == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pt.upper == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pt.deriv == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("probe flags non-finite coefficients instead of crashing") {
  JumpDiffusionModel m = make_builtin_model(BuiltinKind::additive, 1.0, zero_jump_law());
  m.drift = [](double, std::span<const double> x, std::span<double> out) {
    out[0] = x[0] > 4.9 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  const ProbeReport rep =
      probe_assumptions(m, Box{{0.0}, {1.0}}, Box{{-5.0}, {5.0}}, Box{{-10.0}, {10.0}}, 2000, 3);
  CHECK(!rep.failures.empty());
}

TEST_CASE("parameter context validates the grid laws") {
  CHECK_THROWS_AS(ParameterContext(0.0, 1.0, 10, 1.5), invalid_parameter_error);
  CHECK_THROWS_AS(ParameterContext(0.0, 1.0, 10, 0.0), invalid_parameter_error);
  const ParameterContext ctx(1.0, 2.0, 100, 0.25);
  CHECK(ctx.horizon() == doctest::Approx(25.0));
  CHECK(ctx.theta_n() == doctest::Approx(1.0 + 2.0 / 5.0));
  CHECK(ctx.theta_of(0.5) == doctest::Approx(1.0 + 1.0 / 5.0));
  CHECK(ctx.theta_of(0.0) == doctest::Approx(1.0));
}
