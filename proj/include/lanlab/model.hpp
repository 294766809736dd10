#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lanlab/core.hpp"
#include "lanlab/ftransform.hpp"
#include "lanlab/rng.hpp"
#include "lanlab/stats.hpp"

namespace lanlab {

enum class JumpClass {
  support_away_from_zero,  // class 1
  power_kappa,             // class 2
  gaussian_plus_power,     // class 3
  gamma_plus_power,        // class 4
  custom
};

/// Finite-activity Levy specification: nu(dz) = intensity * mu(dz).
struct LevySpec {
  double intensity = 0.0;  // lambda = nu(R^d), finite
  std::function<void(RngStream&, std::span<double>)> jump_sampler;  // z ~ mu
  std::vector<double> jump_mean;   // E_mu[z]
  double jump_second_moment = 0.0; // E_mu |z|^2
  std::function<double(double)> small_ball_mass;  // r -> nu({|z| <= r})
  JumpClass class_tag = JumpClass::custom;
  bool is_gaussian = false;  // set when mu = N(g_mean, g_sd^2); enables closed-form densities
  double g_mean = 0.0;
  double g_sd = 0.0;

  void validate() const {
    if (intensity < 0.0) throw invalid_parameter_error("LevySpec: negative intensity");
    if (!std::isfinite(intensity)) throw invalid_parameter_error("LevySpec: infinite intensity");
    if (!std::isfinite(jump_second_moment) || jump_second_moment < 0.0)
      throw invalid_parameter_error("LevySpec: jump second moment must be finite and >= 0");
    if (intensity > 0.0 && !jump_sampler)
      throw invalid_parameter_error("LevySpec: missing jump sampler");
  }
};

inline LevySpec zero_jump_law() {
  LevySpec s;
  s.intensity = 0.0;
  s.jump_mean = {0.0};
  s.jump_second_moment = 0.0;
  s.small_ball_mass = [](double) { return 0.0; };
  return s;
}

inline LevySpec gaussian_jump_law(double intensity, double mean, double sd) {
  if (sd < 0.0) throw invalid_parameter_error("gaussian_jump_law: negative sd");
  LevySpec s;
  s.intensity = intensity;
  s.jump_mean = {mean};
  s.jump_second_moment = mean * mean + sd * sd;
  s.jump_sampler = [mean, sd](RngStream& rng, std::span<double> z) {
    z[0] = mean + sd * rng.normal();
  };
  s.small_ball_mass = [intensity, mean, sd](double r) {
    if (r < 0.0) throw std::domain_error("small_ball_mass: negative radius");
    if (sd == 0.0) return std::fabs(mean) <= r ? intensity : 0.0;
    return intensity * (normal_cdf(r, mean, sd) - normal_cdf(-r, mean, sd));
  };
  s.class_tag = JumpClass::custom;
  s.is_gaussian = true;
  s.g_mean = mean;
  s.g_sd = sd;
  return s;
}

/// Class 1: support on {|z| >= C}; concretely |z| = C + Exp(1) with random sign.
inline LevySpec class1_jump_law(double intensity, double support_radius) {
  if (support_radius <= 0.0)
    throw invalid_parameter_error("class1_jump_law: support radius must be > 0");
  LevySpec s;
  s.intensity = intensity;
  s.jump_mean = {0.0};
  const double c = support_radius;
  s.jump_second_moment = c * c + 2.0 * c + 2.0;  // E (C + Exp(1))^2
  s.jump_sampler = [c](RngStream& rng, std::span<double> z) {
    const double mag = c - std::log(rng.uniform());
    z[0] = rng.uniform() < 0.5 ? -mag : mag;
  };
  s.small_ball_mass = [intensity, c](double r) {
    if (r < 0.0) throw std::domain_error("small_ball_mass: negative radius");
    return r < c ? 0.0 : intensity * (1.0 - std::exp(-(r - c)));
  };
  s.class_tag = JumpClass::support_away_from_zero;
  return s;
}

/// Class 2: nu(dz) = |z|^{-1-alpha} 1{|z| <= 1} dz with alpha < 0.
inline LevySpec class2_jump_law(double alpha) {
  if (!(alpha < 0.0)) throw invalid_parameter_error("class2_jump_law: alpha must be < 0");
  LevySpec s;
  s.intensity = -2.0 / alpha;
  s.jump_mean = {0.0};
  s.jump_second_moment = -alpha / (2.0 - alpha);
  s.jump_sampler = [alpha](RngStream& rng, std::span<double> z) {
    const double mag = std::pow(rng.uniform(), -1.0 / alpha);
    z[0] = rng.uniform() < 0.5 ? -mag : mag;
  };
  const double lambda = s.intensity;
  s.small_ball_mass = [lambda, alpha](double r) {
    if (r < 0.0) throw std::domain_error("small_ball_mass: negative radius");
    return lambda * std::pow(std::min(r, 1.0), -alpha);
  };
  s.class_tag = JumpClass::power_kappa;
  return s;
}

namespace detail {

inline double half_normal_tail_second_moment(double a) {
  // int_a^inf z^2 phi(z) dz = a phi(a) + 1 - Phi(a)
  return a * normal_pdf(a) + 1.0 - normal_cdf(a);
}

inline double exp_integral_e1(double x) {
  // E1(x) = -Ei(-x), x > 0
  return -std::expint(-x);
}

}  // namespace detail

/// Class 3: C1 * phi(z) 1{|z| > 1} + C2 |z|^kappa 1{|z| <= 1}, phi standard Gaussian.
inline LevySpec class3_jump_law(double c1, double c2, double kappa) {
  if (c1 <= 0.0 || c2 <= 0.0 || kappa <= -1.0)
    throw invalid_parameter_error("class3_jump_law: need C1,C2 > 0 and kappa > -1");
  LevySpec s;
  const double small = 2.0 * c2 / (kappa + 1.0);
  const double tail = 1.0 - normal_cdf(1.0);
  const double large = 2.0 * c1 * tail;
  s.intensity = small + large;
  s.jump_mean = {0.0};
  s.jump_second_moment =
      (2.0 * c2 / (kappa + 3.0) + 2.0 * c1 * detail::half_normal_tail_second_moment(1.0)) /
      s.intensity;
  const double p_small = small / s.intensity;
  s.jump_sampler = [p_small, kappa, tail](RngStream& rng, std::span<double> z) {
    double mag;
    if (rng.uniform() < p_small) {
      mag = std::pow(rng.uniform(), 1.0 / (kappa + 1.0));
    } else {
      mag = normal_quantile(normal_cdf(1.0) + rng.uniform() * tail);
    }
    z[0] = rng.uniform() < 0.5 ? -mag : mag;
  };
  s.small_ball_mass = [small, kappa, c1](double r) {
    if (r < 0.0) throw std::domain_error("small_ball_mass: negative radius");
    double m = small * std::pow(std::min(r, 1.0), kappa + 1.0);
    if (r > 1.0) m += 2.0 * c1 * (normal_cdf(r) - normal_cdf(1.0));
    return m;
  };
  s.class_tag = JumpClass::gaussian_plus_power;
  return s;
}

/// Class 4: like class 3 but with symmetric-gamma tail a e^{-b|z|}/|z| beyond 1.
inline LevySpec class4_jump_law(double c1, double c2, double kappa, double a, double b) {
  if (c1 <= 0.0 || c2 <= 0.0 || kappa <= -1.0 || a <= 0.0 || b <= 0.0)
    throw invalid_parameter_error("class4_jump_law: invalid parameters");
  LevySpec s;
  const double small = 2.0 * c2 / (kappa + 1.0);
  const double large = 2.0 * c1 * a * detail::exp_integral_e1(b);
  s.intensity = small + large;
  s.jump_mean = {0.0};
  // large-part second moment: 2 C1 a int_1^inf z e^{-bz} dz = 2 C1 a e^{-b}(1+b)/b^2
  s.jump_second_moment =
      (2.0 * c2 / (kappa + 3.0) + 2.0 * c1 * a * std::exp(-b) * (1.0 + b) / (b * b)) /
      s.intensity;
  const double p_small = small / s.intensity;
  s.jump_sampler = [p_small, kappa, b](RngStream& rng, std::span<double> z) {
    double mag;
    if (rng.uniform() < p_small) {
      mag = std::pow(rng.uniform(), 1.0 / (kappa + 1.0));
    } else {
      // rejection: propose 1 + Exp(b), accept with probability 1/t
      for (;;) {
        const double t = 1.0 - std::log(rng.uniform()) / b;
        if (rng.uniform() * t <= 1.0) {
          mag = t;
          break;
        }
      }
    }
    z[0] = rng.uniform() < 0.5 ? -mag : mag;
  };
  s.small_ball_mass = [small, kappa, c1, a, b](double r) {
    if (r < 0.0) throw std::domain_error("small_ball_mass: negative radius");
    double m = small * std::pow(std::min(r, 1.0), kappa + 1.0);
    if (r > 1.0)
      m += 2.0 * c1 * a * (detail::exp_integral_e1(b) - detail::exp_integral_e1(b * r));
    return m;
  };
  s.class_tag = JumpClass::gamma_plus_power;
  return s;
}

struct JumpClassParams {
  double support_radius = 1.0;  // class 1
  double alpha = -1.0;          // class 2
  double c1 = 1.0, c2 = 1.0, kappa = 0.0;  // classes 3, 4
  double gamma_a = 1.0, gamma_b = 1.0;     // class 4
};

/// Closed-form small-ball mass nu({|z| <= r}) for the four jump classes.
/// Classes 2-4 are exact for r <= 1 and extended with their analytic tail
/// integrals beyond; class 1 is 0 below the support radius.
inline double small_ball_mass_closed_form(JumpClass tag, const JumpClassParams& p, double r) {
  if (r < 0.0) throw std::domain_error("small_ball_mass_closed_form: negative radius");
  switch (tag) {
    case JumpClass::support_away_from_zero:
      if (r < p.support_radius) return 0.0;
      throw unsupported_error(
          "small_ball_mass_closed_form: class-1 mass beyond the support radius depends on "
          "the concrete law");
    case JumpClass::power_kappa: {
      if (!(p.alpha < 0.0))
        throw invalid_parameter_error("small_ball_mass_closed_form: alpha must be < 0");
      return (-2.0 / p.alpha) * std::pow(std::min(r, 1.0), -p.alpha);
    }
    case JumpClass::gaussian_plus_power: {
      if (p.kappa <= -1.0)
        throw invalid_parameter_error("small_ball_mass_closed_form: kappa must be > -1");
      double m = (2.0 * p.c2 / (p.kappa + 1.0)) * std::pow(std::min(r, 1.0), p.kappa + 1.0);
      if (r > 1.0) m += 2.0 * p.c1 * (normal_cdf(r) - normal_cdf(1.0));
      return m;
    }
    case JumpClass::gamma_plus_power: {
      if (p.kappa <= -1.0)
        throw invalid_parameter_error("small_ball_mass_closed_form: kappa must be > -1");
      double m = (2.0 * p.c2 / (p.kappa + 1.0)) * std::pow(std::min(r, 1.0), p.kappa + 1.0);
      if (r > 1.0)
        m += 2.0 * p.c1 * p.gamma_a *
             (detail::exp_integral_e1(p.gamma_b) - detail::exp_integral_e1(p.gamma_b * r));
      return m;
    }
    default:
      throw unsupported_error("small_ball_mass_closed_form: unsupported class");
  }
}

enum class ClosedForm { none, additive, ou };
enum class BuiltinKind { additive, ou };

/// The SDE dX = b(theta,X) dt + sigma(X) dB + int c(X-,z) (N - nu dz dt).
/// All callables must be pure; instances are immutable after construction and
/// safe to share across replication threads.
struct JumpDiffusionModel {
  std::size_t dim = 1;
  std::function<void(double, std::span<const double>, std::span<double>)> drift;
  std::function<void(double, std::span<const double>, std::span<double>)> drift_theta_deriv;
  std::function<void(double, std::span<const double>, std::span<double>)> drift_theta2_deriv;  // optional
  std::function<void(std::span<const double>, std::span<double>)> diffusion;  // d x d row-major
  std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> jump_coeff;
  std::function<void(std::span<const double>, std::span<double>)> jump_compensator;  // int c(x,z) nu(dz)
  LevySpec levy;
  ClosedForm closed_form = ClosedForm::none;
  double sigma_const = 0.0;           // scalar sigma for the built-in models
  double diffusion_norm_bound = 0.0;  // sup_x |sigma(x)| when known

  void validate() const {
    if (dim < 1) throw invalid_parameter_error("model: dim must be >= 1");
    if (!drift || !drift_theta_deriv || !diffusion || !jump_coeff || !jump_compensator)
      throw invalid_parameter_error("model: missing coefficient callable");
    levy.validate();
  }

  /// sigma sigma^T at x into `out` (d x d).
  void diffusion_squared(std::span<const double> x, std::vector<double>& out) const {
    std::vector<double> sig(dim * dim);
    diffusion(x, sig);
    out = mat_aat(sig, dim);
  }
};

struct ParameterContext {
  double theta0 = 0.0;
  double u = 0.0;
  std::size_t n = 1;
  double delta_n = 1.0;

  ParameterContext(double theta0_, double u_, std::size_t n_, double delta_n_)
      : theta0(theta0_), u(u_), n(n_), delta_n(delta_n_) {
    if (n < 1) throw invalid_parameter_error("ParameterContext: n must be >= 1");
    if (!(delta_n > 0.0 && delta_n <= 1.0))
      throw invalid_parameter_error("ParameterContext: delta_n must lie in (0,1]");
  }

  double horizon() const { return double(n) * delta_n; }
  double rate() const { return std::sqrt(horizon()); }
  double theta_n() const { return theta0 + u / rate(); }
  double theta_of(double ell) const { return theta0 + ell * u / rate(); }
};

/// Built-in one-dimensional example models with c(x,z) = z:
///   additive: b(theta,x) = theta,    constant sigma
///   ou:       b(theta,x) = -theta x, constant sigma
inline JumpDiffusionModel make_builtin_model(BuiltinKind kind, double sigma, LevySpec levy) {
  if (!(sigma > 0.0)) throw invalid_parameter_error("make_builtin_model: sigma must be > 0");
  levy.validate();
  if (levy.jump_mean.size() != 1)
    throw invalid_parameter_error("make_builtin_model: jump law must be one-dimensional");

  JumpDiffusionModel m;
  m.dim = 1;
  m.levy = std::move(levy);
  m.sigma_const = sigma;
  m.diffusion_norm_bound = sigma;
  const double comp = m.levy.intensity * m.levy.jump_mean[0];
  if (kind == BuiltinKind::additive) {
    m.closed_form = ClosedForm::additive;
    m.drift = [](double theta, std::span<const double>, std::span<double> out) { out[0] = theta; };
    m.drift_theta_deriv = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  } else {
    m.closed_form = ClosedForm::ou;
    m.drift = [](double theta, std::span<const double> x, std::span<double> out) {
      out[0] = -theta * x[0];
    };
    m.drift_theta_deriv = [](double, std::span<const double> x, std::span<double> out) {
      out[0] = -x[0];
    };
  }
  m.drift_theta2_deriv = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  m.diffusion = [sigma](std::span<const double>, std::span<double> out) { out[0] = sigma; };
  m.jump_coeff = [](std::span<const double>, std::span<const double> z, std::span<double> out) {
    out[0] = z[0];
  };
  m.jump_compensator = [comp](std::span<const double>, std::span<double> out) { out[0] = comp; };
  m.validate();
  return m;
}

struct Box {
  std::vector<double> lo, hi;

  void validate(std::size_t dim) const {
    if (lo.size() != dim || hi.size() != dim)
      throw invalid_parameter_error("Box: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i)
      if (!(lo[i] < hi[i])) throw invalid_parameter_error("Box: empty box");
  }
};

struct PsiGridPoint {
  double v = 0.0, z = 0.0;
  double deriv = 0.0, lower = 0.0, upper = 0.0;
  bool pass = false;
};

struct ProbeReport {
  double lipschitz_drift = 0.0;      // max finite-difference ratio for b (A1)
  double lipschitz_diffusion = 0.0;  // max finite-difference ratio for sigma (A1)
  double min_diffusion_eig = 0.0;    // min eigenvalue of sigma sigma^T (A2)
  double min_jump_ratio = 0.0;       // min |c(x,z)|/|z| (A3)
  std::vector<PsiGridPoint> psi_points;  // A8(a) grid, d = 1 only
  bool psi_all_pass = true;
  std::vector<std::string> failures;
};

namespace detail {

inline void psi_bounds(double z, double& lower, double& upper) {
  const double t = std::sqrt(z * z + 4.0) + std::fabs(z);
  lower = 8.0 / (t * t * t);
  upper = t * t * t / 8.0;
}

}  // namespace detail

/// Randomized checks of A1-A3 plus the A8(a) derivative-bound grid for d = 1.
inline ProbeReport probe_assumptions(const JumpDiffusionModel& model, const Box& theta_box,
                                     const Box& x_box, const Box& z_box,
                                     std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 2) throw invalid_parameter_error("probe_assumptions: sample_count >= 2");
  theta_box.validate(1);
  x_box.validate(model.dim);
  z_box.validate(model.dim);

  ProbeReport rep;
  rep.min_diffusion_eig = std::numeric_limits<double>::infinity();
  rep.min_jump_ratio = std::numeric_limits<double>::infinity();
  RngStream rng(derive_seed(seed, 0x70726f6265ull), 0);

  const std::size_t d = model.dim;
  std::vector<double> x(d), y(d), z(d), bx(d), by(d), sx(d * d), sy(d * d), cz(d);
  std::vector<double> ssq;
  auto draw_box = [&rng](const Box& b, std::vector<double>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(b.lo[i], b.hi[i]);
  };

  for (std::size_t s = 0; s < sample_count; ++s) {
    const double theta = rng.uniform(theta_box.lo[0], theta_box.hi[0]);
    draw_box(x_box, x);
    draw_box(x_box, y);
    do {
      draw_box(z_box, z);
    } while (norm(z) < 1e-3);

    model.drift(theta, x, bx);
    model.drift(theta, y, by);
    model.diffusion(x, sx);
    model.diffusion(y, sy);
    model.jump_coeff(x, z, cz);
    if (!all_finite(bx) || !all_finite(by) || !all_finite(sx) || !all_finite(sy) ||
        !all_finite(cz)) {
      rep.failures.push_back("non-finite coefficient at sample " + std::to_string(s));
      continue;
    }

    double dxy = 0.0, dbb = 0.0, dss = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dxy += (x[i] - y[i]) * (x[i] - y[i]);
      dbb += (bx[i] - by[i]) * (bx[i] - by[i]);
    }
    for (std::size_t i = 0; i < d * d; ++i) dss += (sx[i] - sy[i]) * (sx[i] - sy[i]);
    if (dxy > 1e-16) {
      rep.lipschitz_drift = std::max(rep.lipschitz_drift, std::sqrt(dbb / dxy));
      rep.lipschitz_diffusion = std::max(rep.lipschitz_diffusion, std::sqrt(dss / dxy));
    }

    model.diffusion_squared(x, ssq);
    rep.min_diffusion_eig = std::min(rep.min_diffusion_eig, sym_min_eigenvalue(ssq, d));
    rep.min_jump_ratio = std::min(rep.min_jump_ratio, norm(cz) / norm(z));
  }

  if (d == 1) {
    const double h = 1e-6;
    std::vector<double> cvz(1);
    auto chart_image = [&](double v, double zz) {
      const double g = detail::f_inverse_scalar(v);
      const double gv[1] = {g}, zv[1] = {zz};
      model.jump_coeff(std::span<const double>(gv, 1), std::span<const double>(zv, 1), cvz);
      return detail::f_scalar(g + cvz[0]);
    };
    for (int iv = -99; iv <= 99; ++iv) {
      const double v = double(iv) / 100.0;
      for (int iz = -10; iz <= 10; ++iz) {
        const double zz = double(iz);
        PsiGridPoint pt;
        pt.v = v;
        pt.z = zz;
        detail::psi_bounds(zz, pt.lower, pt.upper);
        const double fp = chart_image(v + h, zz), fm = chart_image(v - h, zz);
        pt.deriv = (fp - fm) / (2.0 * h);
        if (!std::isfinite(pt.deriv)) {
          rep.failures.push_back("non-finite psi derivative at v=" + std::to_string(v) +
                                 " z=" + std::to_string(zz));
          pt.pass = false;
        } else {
          const double tol = 1e-6 * (1.0 + pt.upper);
          pt.pass = pt.deriv >= pt.lower - tol && pt.deriv <= pt.upper + tol;
        }
        rep.psi_all_pass = rep.psi_all_pass && pt.pass;
        rep.psi_points.push_back(pt);
      }
    }
  }
  return rep;
}

}  // namespace lanlab
