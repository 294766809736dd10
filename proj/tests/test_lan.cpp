#include <doctest.h>

#include <cmath>

#include "lanlab/lan.hpp"
#include "lanlab/simulate.hpp"
#include "lanlab/stats.hpp"

using namespace lanlab;

namespace {

ObservationRecord sim(const JumpDiffusionModel& m, const ParameterContext& ctx, double x0,
                      SimMethod method, LatentMode latent, RngKey key, int substeps = 8) {
  const double x0v[1] = {x0};
  return simulate_grid(m, ctx.theta0, std::span<const double>(x0v, 1), ctx,
                       {method, substeps}, latent, key);
}

ObservationRecord manual_record(std::vector<double> values, double delta, double theta_sim) {
  ObservationRecord rec;
  rec.dim = 1;
  rec.n = values.size() - 1;
  rec.delta_n = delta;
  rec.theta_sim = theta_sim;
  rec.x0 = {values[0]};
  rec.values = std::move(values);
  return rec;
}

}  // namespace

TEST_CASE("main term matches the additive closed form path by path") {
  const double sigma = 1.3, u = 0.8;
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, sigma, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx(0.5, u, 200, 0.05);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const ObservationRecord rec =
        sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::coarse, {400, rep});
    double db_sum = 0.0;
    for (std::size_t k = 0; k < rec.n; ++k) db_sum += rec.latent[k].brownian_increment[0];
    const double expected =
        u / (sigma * ctx.rate()) * db_sum - u * u / (2.0 * sigma * sigma);
    CHECK(main_term_sum(rec, m, ctx) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("main term law is exactly N(-u^2/(2s^2), u^2/s^2) for every n") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx(1.0, 1.0, 100, 0.1);
  const std::size_t reps = 10000;
  std::vector<double> vals(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const ObservationRecord rec =
        sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::coarse, {401, r});
    vals[r] = main_term_sum(rec, m, ctx);
  }
  const SampleMoments mm = sample_moments(vals);
  CHECK(std::fabs(mm.mean + 0.5) < 3.0 / std::sqrt(double(reps)));
  CHECK(std::fabs(mm.variance - 1.0) < 3.0 * std::sqrt(2.0 / double(reps - 1)));
  CHECK(ks_to_normal(vals, -0.5, 1.0) < 0.02);
}

TEST_CASE("l-quadrature is exact for affine drift: node doubling is inert") {
  const JumpDiffusionModel m = make_builtin_model(BuiltinKind::ou, 1.0, zero_jump_law());
  const ParameterContext ctx(1.0, 1.5, 50, 0.1);
  const ObservationRecord rec =
      sim(m, ctx, 0.4, SimMethod::exact_closed_form, LatentMode::coarse, {402, 0});
  const double a = main_term_sum(rec, m, ctx, 16);
  const double b = main_term_sum(rec, m, ctx, 32);
  CHECK(std::fabs(a - b) < 1e-12 * (1.0 + std::fabs(a)));
}

TEST_CASE("main term vanishes at u = 0 and requires latent data") {
  const JumpDiffusionModel m = make_builtin_model(BuiltinKind::ou, 1.0, zero_jump_law());
  const ParameterContext ctx(1.0, 0.0, 20, 0.1);
  const ObservationRecord rec =
      sim(m, ctx, 0.4, SimMethod::exact_closed_form, LatentMode::coarse, {403, 0});
  CHECK(main_term_sum(rec, m, ctx) == doctest::Approx(0.0));
  const ObservationRecord bare =
      sim(m, ctx, 0.4, SimMethod::exact_closed_form, LatentMode::none, {403, 0});
  CHECK_THROWS_AS(main_term_sum(bare, m, ctx), precondition_error);
}

TEST_CASE("OU main term concentrates near -u^2 Gamma / 2") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx(1.0, 1.0, 8000, 0.05);  // horizon 400
  const std::size_t reps = 200;
  double acc = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const ObservationRecord rec =
        sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::coarse, {404, r});
    acc += main_term_sum(rec, m, ctx);
  }
  CHECK(acc / double(reps) == doctest::Approx(-0.5).epsilon(0.35));
}

TEST_CASE("quasi llr hand-computed example") {
  // n=2, delta=1, sigma=1, X=(0,1,1), theta0=0, u=1 -> 1/sqrt(2) - 1/2
  const JumpDiffusionModel m = make_builtin_model(BuiltinKind::additive, 1.0, zero_jump_law());
  const ParameterContext ctx(0.0, 1.0, 2, 1.0);
  const ObservationRecord rec = manual_record({0.0, 1.0, 1.0}, 1.0, 0.0);
  CHECK(quasi_llr(rec, m, ctx) ==
        doctest::Approx(1.0 / std::sqrt(2.0) - 0.5).epsilon(1e-12));
  CHECK(quasi_llr(rec, m, ctx) == doctest::Approx(0.20711).epsilon(1e-4));
}

TEST_CASE("quasi equals exact for the Gaussian (no-jump) additive model") {
  const JumpDiffusionModel m = make_builtin_model(BuiltinKind::additive, 1.2, zero_jump_law());
  const ParameterContext ctx(0.3, 0.9, 500, 0.02);
  const ObservationRecord rec =
      sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::none, {405, 0});
  MixtureDensitySpec spec;
  spec.model = &m;
  const double q = quasi_llr(rec, m, ctx);
  const double e = exact_llr(rec, spec, ctx);
  CHECK(q == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("llr statistics vanish at u = 0") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx(1.0, 0.0, 100, 0.05);
  const ObservationRecord rec =
      sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::none, {406, 0});
  MixtureDensitySpec spec;
  spec.model = &m;
  CHECK(quasi_llr(rec, m, ctx) == doctest::Approx(0.0));
  CHECK(exact_llr(rec, spec, ctx) == doctest::Approx(0.0));
}

TEST_CASE("filtered quasi llr tracks the exact llr at high frequency") {
  // lambda delta = 0.005: mean |exact - quasi(filtered)| <= 0.1 * sd(exact)
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx(1.0, 1.0, 2000, 0.005);
  MixtureDensitySpec spec;
  spec.model = &m;
  const double thr = default_jump_threshold(m, ctx.delta_n);
  const std::size_t reps = 200;
  std::vector<double> exact_vals(reps);
  double abs_diff = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const ObservationRecord rec =
        sim(m, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::none, {407, r});
    exact_vals[r] = exact_llr(rec, spec, ctx);
    abs_diff += std::fabs(exact_vals[r] - quasi_llr(rec, m, ctx, thr));
  }
  const double sd = std::sqrt(sample_moments(exact_vals).variance);
  CHECK(abs_diff / double(reps) <= 0.1 * sd);
}

TEST_CASE("additive remainders vanish exactly; R6 matches its formula") {
  const double sigma = 1.0, lambda = 1.0;
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, sigma, gaussian_jump_law(lambda, 0.3, 1.0));
  const ParameterContext ctx(0.5, 0.0, 50, 0.2);
  const ObservationRecord rec = sim(m, ctx, 0.0, SimMethod::euler, LatentMode::fine, {408, 0}, 64);
  for (std::size_t k = 0; k < 10; ++k) {
    const RemainderComponents rc = remainder_components(rec, m, 0.5, k);
    CHECK(*rc.r1 == 0.0);
    CHECK(*rc.r2 == 0.0);
    CHECK(*rc.r3 == 0.0);
    CHECK(rc.r4 == 0.0);
    CHECK(rc.r5 == 0.0);
    CHECK(rc.z4 == 0.0);
    CHECK(rc.z5 == 0.0);
    double zsum = 0.0;
    for (const auto& ev : rec.latent[k].jumps) zsum += ev.applied[0];
    const double comp = lambda * 0.3;
    const double expected = ctx.delta_n / (sigma * sigma) * (zsum - comp * ctx.delta_n);
    CHECK(rc.r6 == doctest::Approx(expected).epsilon(1e-12));
    CHECK(rc.z6 == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("OU R1 is deterministic -delta^2/2 to 1e-10") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  for (double delta : {0.1, 0.05, 0.025}) {
    const ParameterContext ctx(1.0, 0.0, 3, delta);
    const ObservationRecord rec =
        sim(m, ctx, 0.5, SimMethod::euler, LatentMode::fine, {409, 0}, 64);
    const RemainderComponents rc = remainder_components(rec, m, 1.0, 1);
    CHECK(std::fabs(*rc.r1 - (-0.5 * delta * delta)) < 1e-10);
  }
}

TEST_CASE("additive E[R6^2] = delta^3 within 3 standard errors") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::additive, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const double delta = 0.1;
  const std::size_t n_intervals = 20000;
  const ParameterContext ctx(0.0, 0.0, n_intervals, delta);
  const ObservationRecord rec =
      sim(m, ctx, 0.0, SimMethod::euler, LatentMode::fine, {410, 0}, 8);
  std::vector<double> sq(n_intervals);
  for (std::size_t k = 0; k < n_intervals; ++k) {
    const RemainderComponents rc = remainder_components(rec, m, 0.0, k);
    sq[k] = rc.r6 * rc.r6;
  }
  const SampleMoments mm = sample_moments(sq);
  const double se = std::sqrt(mm.variance / double(n_intervals));
  CHECK(std::fabs(mm.mean - delta * delta * delta) < 3.0 * se);
}

TEST_CASE("OU centering: mean(-R1 + R2 + R3) is zero within 3 SE") {
  const JumpDiffusionModel m =
      make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const double delta = 0.1;
  const std::size_t n_intervals = 100000;
  std::vector<double> vals(n_intervals);
  double x = 0.0;
  std::vector<double> xbuf{0.0};
  for (std::size_t k = 0; k < n_intervals; ++k) {
    IntervalLatent lat;
    RngStream rng = RngStream::for_interval(411, 0, k);
    xbuf[0] = x;
    euler_interval(m, 1.0, xbuf, 0.0, delta, 64, LatentMode::fine, rng, &lat, k);
    const RemainderComponents rc =
        remainder_components_interval(m, 1.0, 1.0, x, lat, delta, 64);
    vals[k] = rc.centered_r123();
    x = xbuf[0];
  }
  const SampleMoments mm = sample_moments(vals);
  const double se = std::sqrt(mm.variance / double(n_intervals));
  CHECK(std::fabs(mm.mean) < 3.0 * se);
}

TEST_CASE("fisher information closed forms") {
  CHECK(fisher_closed_form(
            make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0)), 1.0)
            .gamma == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fisher_closed_form(make_builtin_model(BuiltinKind::additive, 2.0, zero_jump_law()),
                           0.7)
            .gamma == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(fisher_closed_form(make_builtin_model(BuiltinKind::ou, 1.0, zero_jump_law()), 1.0)
            .gamma == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(
      fisher_closed_form(make_builtin_model(BuiltinKind::ou, 1.0, zero_jump_law()), 0.0),
      invalid_parameter_error);
}

TEST_CASE("ergodic fisher average") {
  const JumpDiffusionModel add = make_builtin_model(BuiltinKind::additive, 2.0, zero_jump_law());
  const ParameterContext ctx(0.0, 0.0, 100, 0.1);
  const ObservationRecord rec =
      sim(add, ctx, 3.0, SimMethod::exact_closed_form, LatentMode::none, {412, 0});
  const FisherInfo fi = fisher_ergodic(rec, add, 0.0);
  CHECK(fi.gamma == doctest::Approx(0.25).epsilon(1e-14));  // constant summand
  CHECK(fi.n_used == 100);

  // n = 1 degenerate average: (d_theta b(x0))^2 / sigma^2 = x0^2 / sigma^2
  const JumpDiffusionModel ou = make_builtin_model(BuiltinKind::ou, 2.0, zero_jump_law());
  ObservationRecord one;
  one.dim = 1;
  one.n = 1;
  one.delta_n = 0.5;
  one.values = {1.5, 2.0};
  one.x0 = {1.5};
  CHECK(fisher_ergodic(one, ou, 1.0).gamma == doctest::Approx(1.5 * 1.5 / 4.0).epsilon(1e-14));

  // OU with jumps: long-horizon average near the closed form
  const JumpDiffusionModel ouj =
      make_builtin_model(BuiltinKind::ou, 1.0, gaussian_jump_law(1.0, 0.0, 1.0));
  const ParameterContext ctx2(1.0, 0.0, 40000, 0.05);  // horizon 2000
  const ObservationRecord rec2 =
      sim(ouj, ctx2, 0.0, SimMethod::exact_closed_form, LatentMode::none, {413, 0});
  CHECK(fisher_ergodic(rec2, ouj, 1.0).gamma == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("exact llr demands the additive closed form") {
  const JumpDiffusionModel ou = make_builtin_model(BuiltinKind::ou, 1.0, zero_jump_law());
  const ParameterContext ctx(1.0, 1.0, 10, 0.1);
  const ObservationRecord rec =
      sim(ou, ctx, 0.0, SimMethod::exact_closed_form, LatentMode::none, {414, 0});
  MixtureDensitySpec spec;
  spec.model = &ou;
  CHECK_THROWS_AS(exact_llr(rec, spec, ctx), precondition_error);
}
