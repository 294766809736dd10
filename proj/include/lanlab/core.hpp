#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lanlab {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_parameter_error : error { using error::error; };
struct unsupported_error : error { using error::error; };
struct precondition_error : error { using error::error; };
struct accuracy_error : error { using error::error; };
struct ellipticity_error : error { using error::error; };
struct no_root_error : error { using error::error; };
struct numeric_error : error { using error::error; };

struct validation_error : error {
  std::vector<std::string> fields;
  explicit validation_error(const std::string& msg, std::vector<std::string> f = {})
      : error(msg), fields(std::move(f)) {}
};

struct simulation_diverged_error : error {
  std::size_t step;
  simulation_diverged_error(const std::string& msg, std::size_t s) : error(msg), step(s) {}
};

// Dense helpers for small d x d matrices stored row-major in std::vector.

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void mat_vec(std::span<const double> m, std::span<const double> x,
                    std::span<double> out) {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += m[i * d + j] * x[j];
    out[i] = s;
  }
}

// a * a^T for row-major a.
inline std::vector<double> mat_aat(std::span<const double> a, std::size_t d) {
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += a[i * d + k] * a[j * d + k];
      out[i * d + j] = s;
    }
  return out;
}

// In-place lower Cholesky; false if the matrix is not positive definite.
inline bool cholesky(std::vector<double>& a, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        a[i * d + i] = std::sqrt(s);
      } else {
        a[i * d + j] = s / a[j * d + j];
      }
    }
    for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = 0.0;
  }
  return true;
}

// Solves (L L^T) x = b given the lower factor L.
inline void chol_solve(const std::vector<double>& l, std::span<const double> b,
                       std::span<double> x, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * x[k];
    x[i] = s / l[i * d + i];
  }
  for (std::size_t ii = d; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < d; ++k) s -= l[k * d + ii] * x[k];
    x[ii] = s / l[ii * d + ii];
  }
}

// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi sweeps.
inline double sym_min_eigenvalue(std::vector<double> a, std::size_t d) {
  if (d == 1) return a[0];
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double tau = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
      }
  }
  double mn = a[0];
  for (std::size_t i = 1; i < d; ++i) mn = std::min(mn, a[i * d + i]);
  return mn;
}

}  // namespace lanlab
