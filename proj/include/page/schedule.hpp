#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "page/core.hpp"
#include "page/errors.hpp"

namespace page {

enum class CoefficientMode { Linear, Sublinear };

inline const char* to_string(CoefficientMode m) {
  return m == CoefficientMode::Linear ? "linear" : "sublinear";
}

/// Weights (a, b) of the Lyapunov function
///   psi = f(x) - f* - b*gamma*|grad f(x)|^2 + (a*gamma/p)|g - grad f(x)|^2
///         + (b*gamma/p)|g|^2.
struct LyapunovCoefficients {
  double a = 1.0;
  double b = 0.0;
  CoefficientMode mode = CoefficientMode::Linear;
};

/// The four addends of psi, kept separately for diagnostics.
struct LyapunovValue {
  double suboptimality = 0.0;    // f(x) - f*
  double gradient_term = 0.0;    // -b*gamma*|grad f|^2
  double error_term = 0.0;       // (a*gamma/p)|g - grad f|^2
  double estimator_term = 0.0;   // (b*gamma/p)|g|^2
  double psi = 0.0;
};

inline LyapunovValue lyapunov_terms(double f_gap, double grad_sq, double error_sq, double g_sq,
                                    const LyapunovCoefficients& c, double gamma, double p) {
  LyapunovValue v;
  v.suboptimality = f_gap;
  v.gradient_term = -c.b * gamma * grad_sq;
  v.error_term = c.a * gamma / p * error_sq;
  v.estimator_term = c.b * gamma / p * g_sq;
  v.psi = v.suboptimality + v.gradient_term + v.error_term + v.estimator_term;
  return v;
}

namespace detail {

inline void check_p(double p) {
  if (!(p > 0.0) || !(p <= 1.0)) throw ValidationError("require 0 < p <= 1");
}

// 1 / (L (1 + sqrt(c*tau/(L+tau)) sqrt((1-p)/p)))
inline double gamma_bound(const SmoothnessProfile& prof, double p, double c) {
  check_p(p);
  const double radical = std::sqrt(c * prof.tau / (prof.L + prof.tau)) * std::sqrt((1.0 - p) / p);
  return 1.0 / (prof.L * (1.0 + radical));
}

}  // namespace detail

inline double gamma_max_linear(const SmoothnessProfile& prof, double p) {
  return detail::gamma_bound(prof, p, 4.0);
}

inline double gamma_max_sublinear(const SmoothnessProfile& prof, double p) {
  return detail::gamma_bound(prof, p, 2.0);
}

inline double gamma_max(const SmoothnessProfile& prof, double p, CoefficientMode mode) {
  return mode == CoefficientMode::Linear ? gamma_max_linear(prof, p) : gamma_max_sublinear(prof, p);
}

/// Throws ValidationError naming the violated bound.
inline void validate_stepsize(double gamma, double p, const SmoothnessProfile& prof,
                              CoefficientMode mode) {
  prof.validate();
  detail::check_p(p);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("require gamma > 0");
  const double bound = gamma_max(prof, p, mode);
  if (gamma > bound) {
    std::ostringstream os;
    os.precision(17);
    os << "gamma <= " << (mode == CoefficientMode::Linear ? "1/(L(1+sqrt(4tau/(L+tau))sqrt((1-p)/p)))"
                                                          : "1/(L(1+sqrt(2tau/(L+tau))sqrt((1-p)/p)))")
       << " violated: gamma=" << gamma << " > " << bound;
    throw ValidationError(os.str());
  }
  if (prof.tau == 0.0 && gamma >= 1.0 / prof.L) {
    std::ostringstream os;
    os.precision(17);
    os << "gamma < 1/L required when tau = 0: gamma=" << gamma << ", 1/L=" << 1.0 / prof.L;
    throw ValidationError(os.str());
  }
}

inline LyapunovCoefficients coefficients(double gamma, double p, const SmoothnessProfile& prof,
                                         CoefficientMode mode) {
  validate_stepsize(gamma, p, prof, mode);
  const double s = gamma * (prof.L - prof.tau);
  LyapunovCoefficients c;
  c.mode = mode;
  if (mode == CoefficientMode::Linear) {
    c.a = 1.0 - s / 2.0;
    c.b = s / 2.0;
  } else {
    c.a = 0.5;
    c.b = s / (4.0 - 2.0 * s);
  }
  return c;
}

struct Contraction {
  double rho = 0.0;
  double raw = 0.0;      // before clamping to [0, 1)
  bool clamped = false;
};

/// rho = max(1 - (1 - 2b) gamma mu, 1 - p (1 - 1/(2a))).
inline Contraction contraction_factor(double gamma, double p, const LyapunovCoefficients& c,
                                      const SmoothnessProfile& prof) {
  if (!prof.mu) throw ValidationError("contraction factor requires the PL constant mu");
  if (c.mode != CoefficientMode::Linear)
    throw ValidationError("contraction factor requires linear-mode coefficients");
  detail::check_p(p);
  const double first = 1.0 - (1.0 - 2.0 * c.b) * gamma * *prof.mu;
  const double second = 1.0 - p * (1.0 - 1.0 / (2.0 * c.a));
  Contraction out;
  out.raw = std::max(first, second);
  out.rho = std::clamp(out.raw, 0.0, std::nextafter(1.0, 0.0));
  out.clamped = out.rho != out.raw;
  return out;
}

namespace detail {
inline void check_eta(double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) throw ValidationError("require 0 < eta < 1");
}
}  // namespace detail

/// Iteration-count factor kappa + kappa sqrt(tau/(L p)) + 1/p multiplying log(psi0/eps).
inline double iteration_complexity_linear(const SmoothnessProfile& prof, double p, double eta) {
  detail::check_eta(eta);
  detail::check_p(p);
  const double kappa = prof.kappa();
  return kappa + kappa * std::sqrt(prof.tau / (prof.L * p)) + 1.0 / p;
}

/// Gradient-evaluation factor multiplying log(psi0/eps).
inline double gradient_complexity_linear(const SmoothnessProfile& prof, double p, std::size_t n,
                                         double eta) {
  detail::check_eta(eta);
  detail::check_p(p);
  const double kappa = prof.kappa();
  const double nn = static_cast<double>(n);
  const double ratio = prof.tau / prof.L;
  return kappa + kappa * p * nn + kappa * std::sqrt(ratio / p) + kappa * std::sqrt(ratio) * nn * std::sqrt(p) +
         1.0 / p + nn;
}

/// Upper bound on E|grad f(x~T)|^2 after T iterations with sublinear coefficients.
inline double sublinear_bound(double psi0, double gamma, const SmoothnessProfile& prof,
                              std::uint64_t T) {
  const double denom = gamma - gamma * gamma * (prof.L - prof.tau);
  if (!(denom > 0.0)) throw ValidationError("gamma - gamma^2 (L - tau) > 0 violated");
  return 2.0 * psi0 / (static_cast<double>(T + 1) * denom);
}

struct RatePrediction {
  double rho = 0.0;
  double iteration_bound = 0.0;
  double gradient_bound = 0.0;
};

/// Explicit (constant-free) predictions for reaching E[psi] <= eps.
inline RatePrediction predict_linear(const SmoothnessProfile& prof, double gamma, double p,
                                     std::size_t n, double eta, double psi0, double eps) {
  const auto c = coefficients(gamma, p, prof, CoefficientMode::Linear);
  RatePrediction r;
  r.rho = contraction_factor(gamma, p, c, prof).rho;
  const double log_factor = std::log(std::max(psi0 / eps, 1.0));
  r.iteration_bound = iteration_complexity_linear(prof, p, eta) * log_factor;
  r.gradient_bound = gradient_complexity_linear(prof, p, n, eta) * log_factor;
  return r;
}

}  // namespace page
