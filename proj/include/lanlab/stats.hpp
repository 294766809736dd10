#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lanlab/core.hpp"

namespace lanlab {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double normal_pdf(double x, double mean = 0.0, double var = 1.0) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
}

inline double normal_logpdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + z * z / var);
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * M_SQRT2));
}

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

inline double logsumexp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

inline SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  m.count = x.size();
  if (x.empty()) return m;
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  if (x.size() > 1) {
    double s = 0.0;
    for (double v : x) s += (v - m.mean) * (v - m.mean);
    m.variance = s / double(x.size() - 1);
  }
  return m;
}

/// Kolmogorov-Smirnov distance between a sample and a target CDF.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
  if (sample.empty()) throw precondition_error("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = double(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - double(i + 1) / n));
    d = std::max(d, std::fabs(f - double(i) / n));
  }
  return d;
}

inline double ks_to_normal(const std::vector<double>& sample, double mean, double var) {
  const double sd = std::sqrt(var);
  return ks_distance(sample, [=](double x) { return normal_cdf(x, mean, sd); });
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
  constexpr double kFpMin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// Chi-square survival function P(X > x) with k degrees of freedom.
inline double chi2_sf(double x, double k) { return gamma_q(0.5 * k, 0.5 * x); }

struct GofResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson chi-square test of observed counts against cell probabilities.
/// Cells with expected count below `min_expected` are merged into a remainder cell.
inline GofResult chi2_gof(std::span<const std::size_t> counts,
                          std::span<const double> probs, double min_expected = 5.0) {
  if (counts.size() != probs.size()) throw precondition_error("chi2_gof: size mismatch");
  const double total = double(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  double stat = 0.0;
  std::size_t cells = 0;
  double merged_obs = 0.0, merged_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * total;
    if (e < min_expected) {
      merged_obs += double(counts[i]);
      merged_exp += e;
    } else {
      stat += (double(counts[i]) - e) * (double(counts[i]) - e) / e;
      ++cells;
    }
  }
  if (merged_exp > 0.0) {
    stat += (merged_obs - merged_exp) * (merged_obs - merged_exp) / merged_exp;
    ++cells;
  }
  GofResult r;
  r.statistic = stat;
  r.dof = cells > 1 ? cells - 1 : 1;
  r.p_value = chi2_sf(stat, double(r.dof));
  return r;
}

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
  double estimate = 0.0;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.959963984540054) {
  if (trials == 0) throw precondition_error("wilson_interval: no trials");
  const double n = double(trials);
  const double p = double(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half), p};
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

inline OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw precondition_error("ols_fit: need at least two points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

/// P(Poisson(mean) > i), summed directly.
inline double poisson_upper_tail(double mean, int i) {
  if (mean < 0.0) throw std::domain_error("poisson_upper_tail: negative mean");
  if (mean == 0.0) return 0.0;
  double term = std::exp(-mean);
  double cdf = 0.0;
  for (int k = 0; k <= i; ++k) {
    cdf += term;
    term *= mean / double(k + 1);
  }
  return std::max(0.0, 1.0 - cdf);
}

inline double poisson_log_pmf(int k, double mean) {
  return -mean + double(k) * std::log(mean) - std::lgamma(double(k) + 1.0);
}

}  // namespace lanlab
