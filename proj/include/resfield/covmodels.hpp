#pragma once

// Isotropic correlation families in the resistance metric.
//
// Spectral families S1..S8 are Gaussian scale mixtures
//     C(d) = E[exp(-d W^2 / 2)],  W ~ F,
// and dilution families D1..D3 are Gaussian mixtures of the transitive
// covariogram psi_f of a dilution function f,
//     C(d) = E[psi_f(sqrt(d) Z)],  Z ~ N(0,1).
// Every family has unit variance. cov_value returns the closed form;
// cov_oracle integrates the defining mixture numerically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "resfield/error.hpp"
#include "resfield/rng.hpp"
#include "resfield/text.hpp"

namespace resfield {

enum class Family { S1, S2, S3, S4, S5, S6, S7, S8, D1, D2, D3 };

inline constexpr Family kAllFamilies[] = {Family::S1, Family::S2, Family::S3, Family::S4, Family::S5, Family::S6,
                                          Family::S7, Family::S8, Family::D1, Family::D2, Family::D3};

inline std::string_view family_name(Family f) {
  constexpr std::string_view names[] = {"S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "D1", "D2", "D3"};
  return names[static_cast<int>(f)];
}

inline bool is_spectral(Family f) { return f <= Family::S8; }
inline bool is_dilution(Family f) { return f >= Family::D1; }
inline bool has_spectral_sampler(Family f) { return is_spectral(f) && f != Family::S5; }

struct CovarianceModel {
  Family family = Family::S1;
  double a = 1.0;    // scale
  double tau = 1.0;  // shape, S6 only

  void validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw ArgumentError("model scale a must be positive");
    if (family == Family::S6 && (!(tau > 0.0) || !std::isfinite(tau)))
      throw ArgumentError("model shape tau must be positive");
  }

  std::string to_string() const {
    std::string s = std::string(family_name(family)) + ":a=" + format_double(a);
    if (family == Family::S6) s += ",tau=" + format_double(tau);
    return s;
  }

  friend bool operator==(const CovarianceModel&, const CovarianceModel&) = default;
};

/// Parses `family:param=value,...`, e.g. "S1:a=0.2", "S6:a=1,tau=0.5".
inline CovarianceModel parse_model(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const std::string_view head = trim(spec.substr(0, colon));
  CovarianceModel m;
  bool found = false;
  for (Family f : kAllFamilies)
    if (family_name(f) == head) {
      m.family = f;
      found = true;
    }
  if (!found) throw ParseError("unknown covariance family '" + std::string(head) + "'");

  bool have_a = false;
  if (colon != std::string_view::npos) {
    for (const std::string& item : split_csv_line(spec.substr(colon + 1))) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParseError("model parameter '" + item + "' lacks '='");
      const std::string key(trim(std::string_view(item).substr(0, eq)));
      const double value = parse_double(std::string_view(item).substr(eq + 1), "model parameter");
      if (key == "a") {
        m.a = value;
        have_a = true;
      } else if (key == "tau" && m.family == Family::S6) {
        m.tau = value;
      } else {
        throw ParseError("parameter '" + key + "' not accepted by family " + std::string(head));
      }
    }
  }
  if (!have_a) throw ParseError("model '" + std::string(spec) + "' needs a=<scale>");
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Special functions

/// exp(x^2) erfc(x), stable for large x.
inline double erfcx(double x) {
  if (x < 3.0) return std::exp(x * x) * std::erfc(x);
  // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  double frac = x;
  for (int k = 60; k >= 1; --k) frac = x + (0.5 * k) / frac;
  return 1.0 / (frac * std::sqrt(std::numbers::pi));
}

/// exp(z) K_nu(z) for z > 0, stable for large z.
inline double scaled_bessel_k(double nu, double z) {
  if (z < 50.0) return std::exp(z) * std::cyl_bessel_k(nu, z);
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu - odd * odd) / (k * 8.0 * z);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * z)) * sum;
}

// ---------------------------------------------------------------------------
// Closed forms

inline double cov_value(const CovarianceModel& m, double d) {
  if (!(d >= 0.0)) throw ArgumentError("distance must be nonnegative");
  if (d == 0.0) return 1.0;
  const double a = m.a;
  switch (m.family) {
    case Family::S1:
      return std::exp(-a * a * d / 2.0);
    case Family::S2: {
      const double x = a * std::sqrt(d / 2.0);
      if (x < 1e-4) return 1.0 - x * x / 3.0;
      return std::sqrt(std::numbers::pi) * std::erf(x) / (2.0 * x);
    }
    case Family::S3:
    case Family::D3:
      return erfcx(a * std::sqrt(d / 2.0));
    case Family::S4:
      return std::erfc(a * std::sqrt(d / 2.0));
    case Family::S5: {
      const double y = a * a * d / 2.0;
      const double r = -std::expm1(-y) / y;
      return r * r;
    }
    case Family::S6:
      return std::pow(2.0 * a / (2.0 * a + d), m.tau);
    case Family::S7: {
      const double z = std::pow(a, 4) * d * d / 8.0;
      return a * std::sqrt(d) * scaled_bessel_k(0.25, z) / std::tgamma(0.25);
    }
    case Family::S8:
      return std::exp(-a * std::sqrt(d / 2.0));
    case Family::D1: {
      const double c = a / std::sqrt(2.0 * d);
      return std::erf(c) + std::sqrt(2.0 * d / std::numbers::pi) / a * std::expm1(-c * c);
    }
    case Family::D2:
      return 1.0 / std::sqrt(1.0 + a * a * d);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Spectral measures

/// Symmetric density of F on the real line. S5 uses the corrected density
/// (support |w| < sqrt(2) a), the law of a*sqrt(U1 + U2).
inline double spectral_density(const CovarianceModel& m, double w) {
  if (!is_spectral(m.family) || m.family == Family::S1)
    throw ArgumentError("family " + std::string(family_name(m.family)) + " has no spectral density");
  const double a = m.a;
  const double aw = std::abs(w);
  switch (m.family) {
    case Family::S2:
      return aw < a ? 1.0 / (2.0 * a) : 0.0;
    case Family::S3:
      return 1.0 / (std::numbers::pi * a * (1.0 + w * w / (a * a)));
    case Family::S4:
      return aw > a ? a / (std::numbers::pi * aw * std::sqrt(w * w - a * a)) : 0.0;
    case Family::S5: {
      const double r = aw / a;
      if (r < 1.0) return r * r * r / a;
      if (r < std::numbers::sqrt2) return r * (2.0 - r * r) / a;
      return 0.0;
    }
    case Family::S6:
      return std::pow(a, m.tau) * std::pow(aw, 2.0 * m.tau - 1.0) * std::exp(-a * w * w) / std::tgamma(m.tau);
    case Family::S7:
      return std::numbers::sqrt2 * std::exp(-std::pow(w / a, 4) / 4.0) / (a * std::tgamma(0.25));
    case Family::S8:
      return aw > 0.0 ? a * std::exp(-a * a / (4.0 * w * w)) / (2.0 * std::sqrt(std::numbers::pi) * w * w) : 0.0;
    default:
      return 0.0;
  }
}

/// One draw W ~ F.
inline double sample_spectral(const CovarianceModel& m, RandomStream& rng) {
  const double a = m.a;
  switch (m.family) {
    case Family::S1:
      return a;
    case Family::S2:
      return rng.uniform(-a, a);
    case Family::S3:
      return a * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
    case Family::S4: {
      const double phi = 0.5 * std::numbers::pi * rng.uniform_open();
      return rng.rademacher() * a / std::cos(phi);
    }
    case Family::S6: {
      std::gamma_distribution<double> gamma(m.tau, 1.0 / a);
      return rng.rademacher() * std::sqrt(gamma(rng));
    }
    case Family::S7: {
      std::gamma_distribution<double> gamma(0.25, 1.0);
      return rng.rademacher() * std::pow(4.0 * std::pow(a, 4) * gamma(rng), 0.25);
    }
    case Family::S8:
      return rng.rademacher() * a / (std::numbers::sqrt2 * std::abs(rng.normal()));
    case Family::S5:
      throw ArgumentError("S5 sampler withheld: the published spectral density is invalid");
    default:
      throw ArgumentError("family " + std::string(family_name(m.family)) + " has no spectral measure");
  }
}

// ---------------------------------------------------------------------------
// Dilution functions

/// Below this |t| the logarithmic singularity of D3's K0 kernel is clamped.
inline double d3_clamp(double a) { return 1e-8 / a; }

inline double dilution_eval(const CovarianceModel& m, double t) {
  const double a = m.a;
  const double at = std::abs(t);
  switch (m.family) {
    case Family::D1:
      return at <= a / 2.0 ? 1.0 / std::sqrt(a) : 0.0;
    case Family::D2:
      return std::exp(-a * a * t * t) * std::pow(2.0 / std::numbers::pi, 0.25) * std::sqrt(a);
    case Family::D3: {
      const double x = a * std::max(at, d3_clamp(a));
      if (x > 700.0) return 0.0;  // K0(x) < exp(-700)
      return std::cyl_bessel_k(0.0, x) * std::sqrt(2.0 * a) / std::numbers::pi;
    }
    default:
      throw ArgumentError("family " + std::string(family_name(m.family)) + " has no dilution function");
  }
}

/// Half-width of the support of f, for compactly supported dilution functions.
inline std::optional<double> dilution_support_halfwidth(const CovarianceModel& m) {
  if (m.family == Family::D1) return m.a / 2.0;
  return std::nullopt;
}

// Quadratures are asked for `tolerance * kQuadratureMargin` and accepted if
// the reported error estimate is below `tolerance`.
inline constexpr double kQuadratureMargin = 1e-3;

struct CovOracleConfig {
  double tolerance = 1e-9;        // absolute
  double inner_tolerance = 1e-6;  // D3 covariogram, nested inside the mixture
  std::size_t max_levels = 15;  // adaptive bisection depth
};

namespace detail {

inline void check_quadrature(double error, double tolerance, const char* what) {
  if (!(error <= tolerance)) {
    std::ostringstream os;
    os << what << ": quadrature did not converge (error estimate " << error << " > " << tolerance << ")";
    throw NumericalError(os.str());
  }
}

template <class F>
double integrate_finite(F f, double lo, double hi, const CovOracleConfig& cfg, const char* what) {
  double error = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, static_cast<unsigned>(cfg.max_levels), cfg.tolerance * kQuadratureMargin, &error);
  check_quadrature(error, cfg.tolerance, what);
  return v;
}

// Integral over [0, inf); integrand may have an integrable endpoint singularity at 0.
template <class F>
double integrate_half_line(F f, const CovOracleConfig& cfg, const char* what) {
  boost::math::quadrature::exp_sinh<double> integrator(cfg.max_levels);
  double error = 0.0;
  double l1 = 0.0;
  const double v = integrator.integrate(f, cfg.tolerance * kQuadratureMargin, &error, &l1);
  check_quadrature(error, cfg.tolerance, what);
  return v;
}

// Integral over a finite interval with possible endpoint singularities.
template <class F>
double integrate_singular(F f, double lo, double hi, const CovOracleConfig& cfg, const char* what) {
  boost::math::quadrature::tanh_sinh<double> integrator(cfg.max_levels);
  double error = 0.0;
  double l1 = 0.0;
  // The two-argument form hands over the distance to the nearer endpoint,
  // which keeps abscissae next to a singular endpoint exact.
  const double mid = 0.5 * (lo + hi);
  auto g = [&](double x, double xc) { return f(x < mid ? lo - xc : hi - xc); };
  const double v = integrator.integrate(g, lo, hi, cfg.tolerance * kQuadratureMargin, &error, &l1);
  check_quadrature(error, cfg.tolerance, what);
  return v;
}

inline double standard_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace detail

/// psi_f(h) = integral of f(x + h) f(x) dx. Closed for D1 and D2, numeric for D3.
inline double transitive_covariogram(const CovarianceModel& m, double h, const CovOracleConfig& cfg = {}) {
  const double a = m.a;
  const double ah = std::abs(h);
  switch (m.family) {
    case Family::D1:
      return std::max(0.0, 1.0 - ah / a);
    case Family::D2:
      return std::exp(-a * a * h * h / 2.0);
    case Family::D3: {
      // The integrand is symmetric about x = -h/2 with log singularities at
      // x = 0 and x = -h, so integrate [-h/2, 0] and [0, inf) and double.
      // The unclamped kernel is used here.
      const double c = 2.0 * a / (std::numbers::pi * std::numbers::pi);
      auto k0 = [&](double x) {
        const double ax = a * std::abs(x);
        if (ax < 1e-8) return -std::log(ax / 2.0) - std::numbers::egamma;
        return ax > 700.0 ? 0.0 : std::cyl_bessel_k(0.0, ax);
      };
      auto f = [&](double x) { return c * k0(x + ah) * k0(x); };
      const double knee = 1.0 / a;
      CovOracleConfig inner = cfg;
      inner.tolerance = cfg.inner_tolerance;
      double total = detail::integrate_singular(f, 0.0, knee, inner, "D3 covariogram") +
                     detail::integrate_half_line([&](double u) { return f(knee + u); }, inner, "D3 covariogram");
      // For a*h below 1e-13 the [-h/2, 0] piece is under 1e-10.
      if (a * ah > 1e-13) total += detail::integrate_singular(f, -ah / 2.0, 0.0, inner, "D3 covariogram");
      return 2.0 * total;
    }
    default:
      throw ArgumentError("family " + std::string(family_name(m.family)) + " has no transitive covariogram");
  }
}

/// Mass of f^2 beyond r on one side, i.e. the integral of f(t)^2 over t > r.
/// Used to bound the Poisson dilution truncation bias.
inline double dilution_tail_mass(const CovarianceModel& m, double r, const CovOracleConfig& cfg = {}) {
  if (r <= 0.0) return 1.0;
  const double a = m.a;
  switch (m.family) {
    case Family::D1:
      return std::max(0.0, 0.5 - r / a);
    case Family::D2:
      return 0.5 * std::erfc(std::numbers::sqrt2 * a * r);
    case Family::D3: {
      if (a * r > 700.0) return 0.0;
      auto f = [&](double u) {
        if (a * r + u > 700.0) return 0.0;
        const double k = std::cyl_bessel_k(0.0, a * r + u);
        return k * k;
      };
      return 2.0 / (std::numbers::pi * std::numbers::pi) * detail::integrate_half_line(f, cfg, "D3 tail");
    }
    default:
      throw ArgumentError("family " + std::string(family_name(m.family)) + " has no dilution function");
  }
}

/// Numerical evaluation of the defining mixture integral. Independent of the
/// closed forms in cov_value; used to verify them.
inline double cov_oracle(const CovarianceModel& m, double d, const CovOracleConfig& cfg = {}) {
  if (!(d >= 0.0)) throw ArgumentError("distance must be nonnegative");
  m.validate();
  const double a = m.a;
  const double pi = std::numbers::pi;

  if (is_dilution(m.family)) {
    // C(d) = 2 * integral over z >= 0 of psi(sqrt(d) z) phi(z); psi is even.
    if (d == 0.0) return transitive_covariogram(m, 0.0, cfg);
    const double sd = std::sqrt(d);
    auto integrand = [&](double z) { return 2.0 * transitive_covariogram(m, sd * z, cfg) * detail::standard_normal_pdf(z); };
    if (m.family == Family::D1) return detail::integrate_finite(integrand, 0.0, a / sd, cfg, "D1 oracle");
    return detail::integrate_half_line(integrand, cfg, "dilution oracle");
  }

  switch (m.family) {
    case Family::S1:
      return std::exp(-a * a * d / 2.0);
    case Family::S2:
      return detail::integrate_finite([&](double w) { return std::exp(-d * w * w / 2.0) / a; }, 0.0, a, cfg, "S2 oracle");
    case Family::S3:
      return detail::integrate_half_line(
          [&](double w) { return 2.0 * std::exp(-d * w * w / 2.0) / (pi * a * (1.0 + w * w / (a * a))); }, cfg,
          "S3 oracle");
    case Family::S4:
      // w = a cosh(u) removes the inverse square-root singularity at w = a.
      return detail::integrate_half_line(
          [&](double u) {
            const double c = std::cosh(u);
            if (!std::isfinite(c)) return 0.0;
            return 2.0 / pi * std::exp(-d * a * a * c * c / 2.0) / c;
          },
          cfg, "S4 oracle");
    case Family::S5: {
      // w^2 = a^2 T with T triangular on [0, 2].
      auto g = [&](double t) { return (t < 1.0 ? t : 2.0 - t) * std::exp(-a * a * d * t / 2.0); };
      return detail::integrate_finite(g, 0.0, 1.0, cfg, "S5 oracle") + detail::integrate_finite(g, 1.0, 2.0, cfg, "S5 oracle");
    }
    case Family::S6: {
      // v = w^2 then x = v^tau turns the gamma density into a smooth integrand.
      const double tau = m.tau;
      const double c = std::pow(a, tau) / (tau * std::tgamma(tau));
      return detail::integrate_half_line([&](double x) { return c * std::exp(-(a + d / 2.0) * std::pow(x, 1.0 / tau)); },
                                         cfg, "S6 oracle");
    }
    case Family::S7: {
      const double c = 2.0 * std::numbers::sqrt2 / (a * std::tgamma(0.25));
      return detail::integrate_half_line(
          [&](double w) { return c * std::exp(-std::pow(w / a, 4) / 4.0 - d * w * w / 2.0); }, cfg, "S7 oracle");
    }
    case Family::S8:
      // x = 1/w.
      return detail::integrate_half_line(
          [&](double x) {
            if (x == 0.0 || !std::isfinite(x)) return 0.0;
            const double inner = d == 0.0 ? 0.0 : d / (2.0 * x * x);
            return a / std::sqrt(pi) * std::exp(-a * a * x * x / 4.0 - inner);
          },
          cfg, "S8 oracle");
    default:
      break;
  }
  throw ArgumentError("unsupported family");
}

}  // namespace resfield
