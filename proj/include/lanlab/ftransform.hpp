#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lanlab/core.hpp"

namespace lanlab {

/// The bounded chart f(x) = x / sqrt(1 + |x|^2) together with its
/// Jacobian and Jacobian determinant.
struct FTransform {
  std::vector<double> value;     // f(x), |f| < 1
  std::vector<double> jacobian;  // d x d row-major
  double det = 1.0;              // (1 + |x|^2)^{-d/2 - 1}
};

inline FTransform f_transform_tools(std::span<const double> x) {
  if (!all_finite(x)) throw precondition_error("f_transform_tools: non-finite input");
  const std::size_t d = x.size();
  FTransform t;
  t.value.resize(d);
  t.jacobian.assign(d * d, 0.0);
  const double r2 = dot(x, x);
  const double s = 1.0 / std::sqrt(1.0 + r2);
  for (std::size_t i = 0; i < d; ++i) t.value[i] = x[i] * s;
  const double scale = s * s * s;  // (1+|x|^2)^{-3/2}
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double a = (i == j) ? (1.0 + r2) : 0.0;
      a -= x[i] * x[j];
      t.jacobian[i * d + j] = scale * a;
    }
  }
  t.det = std::pow(1.0 + r2, -0.5 * double(d) - 1.0);
  return t;
}

namespace detail {

// Scalar chart and its inverse, used on the one-dimensional f-chart.
inline double f_scalar(double u) { return u / std::sqrt(1.0 + u * u); }
inline double f_inverse_scalar(double v) { return v / std::sqrt(1.0 - v * v); }

}  // namespace detail

}  // namespace lanlab
