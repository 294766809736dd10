#include <doctest.h>

#include <cmath>

#include "lanlab/quadrature.hpp"
#include "lanlab/stats.hpp"

using namespace lanlab;

TEST_CASE("gauss-legendre nodes and weights match the n=5 table") {
  const QuadRule r = gauss_legendre(5);
  CHECK(r.nodes[2] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(r.nodes[3] == doctest::Approx(0.5384693101056831).epsilon(1e-13));
  CHECK(r.nodes[4] == doctest::Approx(0.9061798459386640).epsilon(1e-13));
  CHECK(r.weights[2] == doctest::Approx(0.5688888888888889).epsilon(1e-13));
  CHECK(r.weights[3] == doctest::Approx(0.47862867049936647).epsilon(1e-13));
  CHECK(r.weights[4] == doctest::Approx(0.23692688505618908).epsilon(1e-13));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const QuadRule r = gauss_legendre(8).mapped_to(0.0, 1.0);
  double s4 = 0.0, s15 = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    s4 += r.weights[i] * std::pow(r.nodes[i], 4);
    s15 += r.weights[i] * std::pow(r.nodes[i], 15);
  }
  CHECK(s4 == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(s15 == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("gauss-hermite reproduces Gaussian moments") {
  for (int n : {16, 64, 128}) {
    const QuadRule r = gauss_hermite(n);
    double s0 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      s0 += r.weights[i];
      s2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      s4 += r.weights[i] * std::pow(r.nodes[i], 4);
    }
    const double sqrt_pi = std::sqrt(M_PI);
    CHECK(s0 == doctest::Approx(sqrt_pi).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(0.5 * sqrt_pi).epsilon(1e-12));
    CHECK(s4 == doctest::Approx(0.75 * sqrt_pi).epsilon(1e-12));
  }
}

TEST_CASE("normal quantile inverts the normal cdf to double precision") {
  for (double p : {1e-12, 1e-8, 1e-4, 0.01, 0.2, 0.5, 0.7, 0.975, 1.0 - 1e-6, 1.0 - 1e-12}) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
}

TEST_CASE("chi-square survival function against closed forms") {
  // df = 2: S(x) = exp(-x/2); df = 1: S(x) = 2 (1 - Phi(sqrt(x)))
  for (double x : {0.1, 1.0, 5.0, 20.0}) {
    CHECK(chi2_sf(x, 2.0) == doctest::Approx(std::exp(-0.5 * x)).epsilon(1e-10));
    CHECK(chi2_sf(x, 1.0) ==
          doctest::Approx(2.0 * (1.0 - normal_cdf(std::sqrt(x)))).epsilon(1e-10));
  }
}

TEST_CASE("incomplete gamma matches the direct Poisson tail") {
  // P(Pois(lam) <= k) = Q(k+1, lam)
  for (double lam : {0.01, 0.5, 3.0}) {
    for (int k : {0, 1, 3}) {
      const double direct = 1.0 - poisson_upper_tail(lam, k);
      CHECK(gamma_q(double(k + 1), lam) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("ks distance of a perfect uniform grid is 1/(2n)") {
  std::vector<double> s;
  const int n = 100;
  for (int i = 0; i < n; ++i) s.push_back((i + 0.5) / n);
  const double d = ks_distance(s, [](double x) { return x; });
  CHECK(d == doctest::Approx(0.5 / n).epsilon(1e-12));
}

TEST_CASE("ols recovers an exact line") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0}, y;
  for (double v : x) y.push_back(3.0 - 2.0 * v);
  const OlsFit f = ols_fit(x, y);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("wilson interval brackets the point estimate and shrinks") {
  const WilsonInterval w1 = wilson_interval(50, 100);
  CHECK(w1.lower < 0.5);
  CHECK(w1.upper > 0.5);
  const WilsonInterval w2 = wilson_interval(5000, 10000);
  CHECK(w2.upper - w2.lower < w1.upper - w1.lower);
  const WilsonInterval w0 = wilson_interval(0, 1000);
  CHECK(w0.lower == doctest::Approx(0.0));
  CHECK(w0.upper < 0.02);
}

TEST_CASE("logsumexp is stable for large magnitudes") {
  std::vector<double> v{-1000.0, -1000.0};
  CHECK(logsumexp(v) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-13));
  std::vector<double> w{700.0, 600.0};
  CHECK(logsumexp(w) == doctest::Approx(700.0 + std::log1p(std::exp(-100.0))).epsilon(1e-13));
}

TEST_CASE("chi2 gof accepts exact multinomial proportions") {
  std::vector<std::size_t> counts{250, 250, 250, 250};
  std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
  const GofResult g = chi2_gof(counts, probs);
  CHECK(g.statistic == doctest::Approx(0.0));
  CHECK(g.p_value == doctest::Approx(1.0));
}
