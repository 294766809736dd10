#pragma once
#include <algorithm>

#include <cmath>
#include <cstddef>
#include <vector>

#include "lanlab/core.hpp"

namespace lanlab {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Affine image of a rule on [-1,1] onto [a,b].
  QuadRule mapped_to(double a, double b) const {
    QuadRule r;
    r.nodes.resize(nodes.size());
    r.weights.resize(weights.size());
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      r.nodes[i] = mid + half * nodes[i];
      r.weights[i] = half * weights[i];
    }
    return r;
  }
};

/// Gauss-Legendre rule on [-1,1], nodes by Newton iteration on P_n.
inline QuadRule gauss_legendre(int n) {
  if (n < 1) throw invalid_parameter_error("gauss_legendre: n must be >= 1");
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / double(j + 1);
      }
      pp = double(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

namespace detail {

// Implicit-QL eigenvalue iteration for a symmetric tridiagonal matrix,
// tracking only the first row of the eigenvector matrix (Golub-Welsch).
inline void tridiag_ql_first_row(std::vector<double>& d, std::vector<double>& e,
                                 std::vector<double>& z) {
  const int n = int(d.size());
  e.resize(n, 0.0);
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw numeric_error("tridiag_ql: no convergence");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

/// Gauss-Hermite rule with weight exp(-x^2), by the Golub-Welsch method
/// (stable for large n, unlike Newton iteration from asymptotic guesses).
inline QuadRule gauss_hermite(int n) {
  if (n < 1) throw invalid_parameter_error("gauss_hermite: n must be >= 1");
  std::vector<double> d(n, 0.0), e(n, 0.0), z(n, 0.0);
  for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(0.5 * double(k));
  z[0] = 1.0;
  detail::tridiag_ql_first_row(d, e, z);

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });

  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = d[order[i]];
    r.weights[i] = mu0 * z[order[i]] * z[order[i]];
  }
  // enforce the exact symmetry of the rule
  for (int i = 0; i < n / 2; ++i) {
    const double node = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    r.nodes[i] = -node;
    r.nodes[n - 1 - i] = node;
    const double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

/// Composite trapezoid over equally spaced samples with spacing h.
inline double trapezoid(std::span<const double> values, double h) {
  if (values.size() < 2) return 0.0;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * h;
}

}  // namespace lanlab
