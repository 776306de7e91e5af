#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "page/core.hpp"
#include "page/errors.hpp"
#include "page/estimator.hpp"
#include "page/schedule.hpp"

namespace page::lyapunov {

inline constexpr std::size_t kMaxEnumeratedComponents = 64;
inline constexpr double kMaxRolloutLeaves = 1e6;

/// Inequality tolerance: lhs <= rhs + max(1e-12, 1e-9 |rhs|).
inline double tolerance(double rhs) { return std::max(1e-12, 1e-9 * std::abs(rhs)); }

/// psi at the state. Costs one full gradient, added to `verification_calls`
/// when given; the state's algorithm counter is left alone.
template <FiniteSum P>
LyapunovValue evaluate(const PageState& s, const P& problem, const LyapunovCoefficients& c,
                       double gamma, double p, std::uint64_t* verification_calls = nullptr) {
  const double f_star = problem.profile().require_f_star();
  const Vector grad = problem.full_gradient(s.x);
  if (verification_calls) *verification_calls += problem.n();
  return lyapunov_terms(problem.value(s.x) - f_star, squared_norm(grad), squared_distance(s.g, grad),
                        squared_norm(s.g), c, gamma, p);
}

/// E[psi^{t+1} | state] by summing over every coin/index outcome, each
/// produced by the estimator's own forced-outcome step.
template <FiniteSum P>
double exact_conditional_expectation(const PageState& s, const P& problem,
                                     const LyapunovCoefficients& c, double gamma, double p,
                                     std::uint64_t* verification_calls = nullptr) {
  const std::size_t n = problem.n();
  if (n > kMaxEnumeratedComponents)
    throw EnumerationLimitError("exact expectation refuses n=" + std::to_string(n) + " > " +
                                std::to_string(kMaxEnumeratedComponents));
  PageConfig cfg;
  cfg.gamma = gamma;
  cfg.p = p;
  double heads = 0.0;
  if (p > 0.0) {
    const PageState next = stepped(s, problem, cfg, Outcome{true, 0});
    heads = evaluate(next, problem, c, gamma, p, verification_calls).psi;
  }
  double tails = 0.0;
  if (p < 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const PageState next = stepped(s, problem, cfg, Outcome{false, i});
      tails += evaluate(next, problem, c, gamma, p, verification_calls).psi;
    }
  }
  return p * heads + (1.0 - p) / static_cast<double>(n) * tails;
}

struct InequalityReport {
  double psi = 0.0;  // psi^t
  double lhs = 0.0;  // E[psi^{t+1} | F^t]
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool pass = false;
};

inline InequalityReport make_report(double psi, double lhs, double rhs) {
  InequalityReport r;
  r.psi = psi;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.pass = lhs <= rhs + tolerance(rhs);
  return r;
}

/// E[psi^{t+1}|F^t] <= rho psi^t for linear-mode coefficients on a PL problem.
template <FiniteSum P>
InequalityReport check_linear_contraction(const PageState& s, const P& problem,
                                          const LyapunovCoefficients& c, double gamma, double p) {
  const auto& prof = problem.profile();
  if (c.mode != CoefficientMode::Linear)
    throw ValidationError("linear contraction check needs linear-mode coefficients");
  validate_stepsize(gamma, p, prof, CoefficientMode::Linear);
  const double rho = contraction_factor(gamma, p, c, prof).rho;
  const double psi = evaluate(s, problem, c, gamma, p).psi;
  const double lhs = exact_conditional_expectation(s, problem, c, gamma, p);
  return make_report(psi, lhs, rho * psi);
}

/// E[psi^{t+1}|F^t] <= psi^t - gamma (1/2 - b) |grad f(x^t)|^2.
template <FiniteSum P>
InequalityReport check_sublinear_descent(const PageState& s, const P& problem,
                                         const LyapunovCoefficients& c, double gamma, double p) {
  const auto& prof = problem.profile();
  if (c.mode != CoefficientMode::Sublinear)
    throw ValidationError("sublinear descent check needs sublinear-mode coefficients");
  validate_stepsize(gamma, p, prof, CoefficientMode::Sublinear);
  const LyapunovValue v = evaluate(s, problem, c, gamma, p);
  const double grad_sq = squared_norm(problem.full_gradient(s.x));
  const double lhs = exact_conditional_expectation(s, problem, c, gamma, p);
  return make_report(v.psi, lhs, v.psi - gamma * (0.5 - c.b) * grad_sq);
}

namespace detail {

template <FiniteSum P>
void expand(const PageState& s, const P& problem, const PageConfig& cfg,
            const LyapunovCoefficients& c, double weight, std::size_t depth, std::size_t horizon,
            std::vector<double>& sums) {
  sums[depth] += weight * evaluate(s, problem, c, cfg.gamma, cfg.p).psi;
  if (depth == horizon) return;
  if (cfg.p > 0.0)
    expand(stepped(s, problem, cfg, Outcome{true, 0}), problem, cfg, c, weight * cfg.p, depth + 1,
           horizon, sums);
  if (cfg.p < 1.0) {
    const double w = weight * (1.0 - cfg.p) / static_cast<double>(problem.n());
    for (std::size_t i = 0; i < problem.n(); ++i)
      expand(stepped(s, problem, cfg, Outcome{false, i}), problem, cfg, c, w, depth + 1, horizon,
             sums);
  }
}

}  // namespace detail

/// Exact E[psi^t] for t = 0..horizon by expanding every outcome sequence.
/// Zero-probability branches are pruned, so p = 1 degenerates to a path.
template <FiniteSum P>
std::vector<double> exact_expectation_rollout(const P& problem, const Vector& x0,
                                              const PageConfig& config,
                                              const LyapunovCoefficients& c, std::size_t horizon) {
  const double branches = (config.p > 0.0 ? 1.0 : 0.0) +
                          (config.p < 1.0 ? static_cast<double>(problem.n()) : 0.0);
  if (std::pow(branches, static_cast<double>(horizon)) > kMaxRolloutLeaves)
    throw EnumerationLimitError("rollout tree exceeds 1e6 leaves");
  const PageState s0 = init(problem, x0, config);
  std::vector<double> sums(horizon + 1, 0.0);
  detail::expand(s0, problem, config, c, 1.0, 0, horizon, sums);
  return sums;
}

}  // namespace page::lyapunov
