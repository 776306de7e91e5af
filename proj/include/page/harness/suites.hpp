#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "page/analysis.hpp"
#include "page/estimator.hpp"
#include "page/lyapunov.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"
#include "page/schedule.hpp"

namespace page::harness {

struct SuiteResult {
  explicit SuiteResult(std::string suite_name = {}) : name(std::move(suite_name)) {}

  std::string name;
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  double worst_slack = std::numeric_limits<double>::infinity();  // normalized by max(1, |rhs|)
  std::string worst_case;
  std::string first_failure;
  double seconds = 0.0;

  bool pass() const { return checks > 0 && failures == 0; }

  void record(double slack, double rhs, bool ok, const std::function<std::string()>& describe) {
    ++checks;
    const double normalized = slack / std::max(1.0, std::abs(rhs));
    if (normalized < worst_slack) {
      worst_slack = normalized;
      worst_case = describe();
    }
    if (!ok) {
      if (failures == 0) first_failure = describe();
      ++failures;
    }
  }

  std::string report() const {
    std::ostringstream os;
    os.precision(6);
    os << name << ": " << (pass() ? "PASS" : "FAIL") << "  checks=" << checks << " failures=" << failures
       << " worst_normalized_slack=" << worst_slack << " time=" << seconds << "s";
    if (failures) os << "\n  first failure: " << first_failure;
    return os.str();
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Vector gaussian(std::size_t d, double scale, CounterRng& rng) {
  Vector v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return v;
}

inline double log_uniform(double lo, double hi, CounterRng& rng) {
  return lo * std::pow(hi / lo, rng.uniform01());
}

}  // namespace detail

/// One instance of every problem family, with the quadratic family at
/// several points of the tau interpolation.
inline std::vector<std::shared_ptr<const FiniteSumProblem>> problem_zoo(std::uint64_t seed) {
  std::vector<std::shared_ptr<const FiniteSumProblem>> zoo;
  for (double ratio : {0.0, 0.25, 0.5, 1.0}) {
    ProblemSpec s;
    s.n = 8;
    s.d = 5;
    s.L = 2.0;
    s.tau = ratio * s.L;
    s.mu = s.L / 20.0;
    s.seed = seed + static_cast<std::uint64_t>(ratio * 100);
    zoo.push_back(problems::interpolated_quadratic(s));
  }
  {
    ProblemSpec s;
    s.n = 5;
    s.d = 3;
    s.L = 1.0;
    s.tau = 0.7;
    s.seed = seed + 7;
    zoo.push_back(problems::interpolated_quadratic(s));
  }
  {
    ProblemSpec s;
    s.family = ProblemFamily::Logistic;
    s.n = 24;
    s.d = 4;
    s.L = 1.5;
    s.seed = seed + 11;
    zoo.push_back(problems::logistic(s));
  }
  zoo.push_back(problems::half_square());
  zoo.push_back(problems::custom_quadratic({{-1.0, 2.0, 0.5}, {3.0, 0.0, 0.5}}));
  return zoo;
}

/// Random (component, x, y) triples against the (L, tau) co-coercivity-type
/// inequality, `triples` per problem family instance.
inline SuiteResult weak_convexity_suite(std::uint64_t seed, std::size_t triples = 10'000) {
  detail::Stopwatch clock;
  SuiteResult res{"weak_convexity"};
  CounterRng rng(seed);
  for (const auto& prob : problem_zoo(seed)) {
    const auto& prof = prob->profile();
    for (std::size_t k = 0; k < triples; ++k) {
      const std::size_t i = rng.below(prob->n());
      const double scale = detail::log_uniform(1e-2, 10.0, rng);
      const Vector x = detail::gaussian(prob->d(), scale, rng);
      const Vector y = k % 10 == 0 ? x : detail::gaussian(prob->d(), scale, rng);
      const auto s = analysis::check_lemma2([&](const Vector& z) { return prob->component_gradient(i, z); },
                                            prof.L, prof.tau, x, y);
      res.record(s.slack, s.rhs, s.pass(), [&] { return prob->family() + " component " + std::to_string(i); });
    }
  }
  res.seconds = clock.seconds();
  return res;
}

/// grad g + L Id monotone and 1/(2L)-cocoercive for every component.
inline SuiteResult cocoercivity_suite(std::uint64_t seed, std::size_t pairs = 10'000) {
  detail::Stopwatch clock;
  SuiteResult res{"cocoercivity"};
  CounterRng rng(seed ^ 0xA5A5);
  for (const auto& prob : problem_zoo(seed)) {
    const double L = prob->profile().L;
    for (std::size_t k = 0; k < pairs; ++k) {
      const std::size_t i = rng.below(prob->n());
      const double scale = detail::log_uniform(1e-2, 10.0, rng);
      const Vector x = detail::gaussian(prob->d(), scale, rng);
      const Vector y = detail::gaussian(prob->d(), scale, rng);
      const auto s = analysis::check_lemma1_monotonicity(
          [&](const Vector& z) { return prob->component_gradient(i, z); }, L, x, y);
      res.record(s.slack, s.rhs, s.pass(), [&] { return prob->family() + " component " + std::to_string(i); });
    }
  }
  res.seconds = clock.seconds();
  return res;
}

/// A random certified instance for the one-step checks: interpolated
/// quadratics (half_square mixed in at tau = 0) for PL grids, plus logistic
/// instances when `allow_logistic` and tau = 0.
struct RandomInstance {
  std::shared_ptr<const FiniteSumProblem> problem;
  std::string label;
};

inline RandomInstance random_instance(double tau_ratio, std::size_t k, CounterRng& rng, bool allow_logistic) {
  if (tau_ratio == 0.0 && k % 8 == 3) return {problems::half_square(), "half_square"};
  if (allow_logistic && tau_ratio == 0.0 && k % 4 == 1) {
    ProblemSpec s;
    s.family = ProblemFamily::Logistic;
    s.n = 1 + rng.below(8);
    s.d = 1 + rng.below(5);
    s.L = detail::log_uniform(0.5, 5.0, rng);
    s.seed = rng.next();
    return {problems::logistic(s), "logistic n=" + std::to_string(s.n) + " d=" + std::to_string(s.d)};
  }
  ProblemSpec s;
  s.n = tau_ratio > 0.0 ? 2 + rng.below(7) : 1 + rng.below(8);
  s.d = 1 + rng.below(5);
  s.L = detail::log_uniform(0.5, 5.0, rng);
  s.tau = tau_ratio * s.L;
  s.mu = s.L / detail::log_uniform(1.0, 100.0, rng);
  s.seed = rng.next();
  std::ostringstream label;
  label << "interpolated_quadratic n=" << s.n << " d=" << s.d << " L=" << s.L << " tau=" << s.tau
        << " mu=" << *s.mu << " seed=" << s.seed;
  return {problems::interpolated_quadratic(s), label.str()};
}

/// Arbitrary F^t-measurable state: x at a random scale and g either random,
/// a perturbed true gradient, zero, or the stationary point itself.
inline PageState random_state(const FiniteSumProblem& prob, std::size_t k, CounterRng& rng) {
  PageState s;
  const double scale = detail::log_uniform(1e-2, 10.0, rng);
  s.x = detail::gaussian(prob.d(), scale, rng);
  switch (k % 5) {
    case 0: s.g = detail::gaussian(prob.d(), scale * prob.profile().L, rng); break;
    case 1: s.g = prob.full_gradient(s.x) + detail::gaussian(prob.d(), 0.1 * scale, rng); break;
    case 2: s.g = Vector(prob.d()); break;
    case 3: s.g = prob.full_gradient(s.x); break;
    default:
      if (prob.family() == "logistic") {
        s.g = detail::gaussian(prob.d(), scale, rng);
      } else {
        s.x = Vector(prob.d());
        s.g = Vector(prob.d());
      }
  }
  return s;
}

inline constexpr double kSuiteTauRatios[] = {0.0, 0.5, 1.0};
inline constexpr double kSuiteProbabilities[] = {0.1, 0.5, 1.0};

/// Exact E[psi^{t+1}|F^t] <= rho psi^t on random states, gamma = 0.9 gamma_max.
inline SuiteResult contraction_suite(std::uint64_t seed, std::size_t states = 1000) {
  detail::Stopwatch clock;
  SuiteResult res{"contraction"};
  CounterRng rng(seed ^ 0xC0FFEE);
  const std::size_t per_cell = (states + 8) / 9;
  for (double ratio : kSuiteTauRatios)
    for (double p : kSuiteProbabilities)
      for (std::size_t k = 0; k < per_cell; ++k) {
        const auto inst = random_instance(ratio, k, rng, false);
        const auto& prof = inst.problem->profile();
        const double gamma = 0.9 * gamma_max_linear(prof, p);
        const auto c = coefficients(gamma, p, prof, CoefficientMode::Linear);
        const PageState s = random_state(*inst.problem, k, rng);
        const auto r = lyapunov::check_linear_contraction(s, *inst.problem, c, gamma, p);
        res.record(r.slack, r.rhs, r.pass, [&] {
          std::ostringstream os;
          os.precision(17);
          os << inst.label << " p=" << p << " lhs=" << r.lhs << " rhs=" << r.rhs;
          return os.str();
        });
      }
  res.seconds = clock.seconds();
  return res;
}

/// Exact E[psi^{t+1}|F^t] <= psi^t - gamma (1/2 - b)|grad f|^2, sublinear coefficients.
inline SuiteResult descent_suite(std::uint64_t seed, std::size_t states = 1000) {
  detail::Stopwatch clock;
  SuiteResult res{"descent"};
  CounterRng rng(seed ^ 0xDE5CE);
  const std::size_t per_cell = (states + 8) / 9;
  for (double ratio : kSuiteTauRatios)
    for (double p : kSuiteProbabilities)
      for (std::size_t k = 0; k < per_cell; ++k) {
        const auto inst = random_instance(ratio, k, rng, true);
        const auto& prof = inst.problem->profile();
        const double gamma = 0.9 * gamma_max_sublinear(prof, p);
        const auto c = coefficients(gamma, p, prof, CoefficientMode::Sublinear);
        const PageState s = random_state(*inst.problem, k, rng);
        const auto r = lyapunov::check_sublinear_descent(s, *inst.problem, c, gamma, p);
        res.record(r.slack, r.rhs, r.pass, [&] {
          std::ostringstream os;
          os.precision(17);
          os << inst.label << " p=" << p << " lhs=" << r.lhs << " rhs=" << r.rhs;
          return os.str();
        });
      }
  res.seconds = clock.seconds();
  return res;
}

struct RolloutInstance {
  double tau_ratio;
  double p;
};

inline constexpr RolloutInstance kRolloutInstances[] = {{0.5, 0.3}, {1.0, 0.5}};

/// Full tree expansion over horizon 9 on n = 2 PL quadratics: every exact
/// E[psi^t] <= rho^t psi^0, and Monte Carlo over `seeds` trajectories agrees
/// with the tree within 4 standard errors at every t.
inline SuiteResult rollout_suite(std::uint64_t seed, std::size_t seeds = 100'000, std::size_t horizon = 9) {
  detail::Stopwatch clock;
  SuiteResult res{"rollout"};
  for (const auto& inst : kRolloutInstances) {
    ProblemSpec spec;
    spec.n = 2;
    spec.d = 3;
    spec.L = 1.0;
    spec.tau = inst.tau_ratio;
    spec.mu = 0.1;
    spec.seed = seed;
    const auto prob = problems::interpolated_quadratic(spec);
    const auto& prof = prob->profile();
    PageConfig cfg;
    cfg.p = inst.p;
    cfg.gamma = 0.9 * gamma_max_linear(prof, cfg.p);
    cfg.g0_mode = ZeroInit{};
    const auto c = coefficients(cfg.gamma, cfg.p, prof, CoefficientMode::Linear);
    const double rho = contraction_factor(cfg.gamma, cfg.p, c, prof).rho;
    const Vector x0{1.0, -2.0, 0.5};

    const auto exact = lyapunov::exact_expectation_rollout(*prob, x0, cfg, c, horizon);
    for (std::size_t t = 0; t <= horizon; ++t) {
      const double rhs = std::pow(rho, static_cast<double>(t)) * exact[0];
      res.record(rhs - exact[t], rhs, exact[t] <= rhs + lyapunov::tolerance(rhs), [&] {
        std::ostringstream os;
        os.precision(17);
        os << "tree tau/L=" << inst.tau_ratio << " p=" << inst.p << " t=" << t << " E[psi]=" << exact[t]
           << " rho^t psi0=" << rhs;
        return os.str();
      });
    }

    std::vector<double> sum(horizon + 1, 0.0), sum_sq(horizon + 1, 0.0);
    for (std::size_t r = 0; r < seeds; ++r) {
      PageConfig run_cfg = cfg;
      run_cfg.seed = seed * 1'000'003ULL + r;
      PageState s = init(*prob, x0, run_cfg);
      for (std::size_t t = 0;; ++t) {
        const double psi = lyapunov::evaluate(s, *prob, c, cfg.gamma, cfg.p).psi;
        sum[t] += psi;
        sum_sq[t] += psi * psi;
        if (t == horizon) break;
        step(s, *prob, run_cfg);
      }
    }
    const double N = static_cast<double>(seeds);
    for (std::size_t t = 0; t <= horizon; ++t) {
      const double mean = sum[t] / N;
      const double var = std::max(0.0, sum_sq[t] / N - mean * mean) * N / (N - 1.0);
      const double band = 4.0 * std::sqrt(var / N) + lyapunov::tolerance(exact[t]);
      const double gap = std::abs(mean - exact[t]);
      res.record(band - gap, band, gap <= band, [&] {
        std::ostringstream os;
        os.precision(17);
        os << "monte carlo tau/L=" << inst.tau_ratio << " p=" << inst.p << " t=" << t << " mc=" << mean
           << " exact=" << exact[t] << " 4se=" << band;
        return os.str();
      });
    }
  }
  res.seconds = clock.seconds();
  return res;
}

/// Every zoo problem passes certification on `samples` draws.
inline SuiteResult certify_suite(std::uint64_t seed, std::size_t samples = 10'000) {
  detail::Stopwatch clock;
  SuiteResult res{"certify"};
  CounterRng rng(seed ^ 0xCE27);
  for (const auto& prob : problem_zoo(seed)) {
    const auto rep = problems::certify(*prob, samples, rng, 2.0, false);
    const double worst = std::min({rep.lipschitz_slack, rep.weak_convexity_slack, rep.pl_slack.value_or(0.0),
                                   rep.lower_bound_slack.value_or(0.0)});
    res.record(worst, 1.0, rep.pass, [&] { return prob->family() + (rep.pass ? "" : ": " + rep.failure); });
  }
  res.seconds = clock.seconds();
  return res;
}

}  // namespace page::harness
