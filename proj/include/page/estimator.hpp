#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "page/core.hpp"
#include "page/errors.hpp"
#include "page/rng.hpp"
#include "page/schedule.hpp"

namespace page {

struct FullGradientInit {};
struct ZeroInit {};
struct ExplicitInit {
  Vector g0;
};
using InitMode = std::variant<FullGradientInit, ZeroInit, ExplicitInit>;

struct PageConfig {
  double gamma = 0.1;
  double p = 1.0;
  InitMode g0_mode = FullGradientInit{};
  std::uint64_t seed = 0;

  void validate(std::size_t d) const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("require gamma > 0");
    if (!(p > 0.0) || !(p <= 1.0)) throw ValidationError("require 0 < p <= 1");
    if (const auto* e = std::get_if<ExplicitInit>(&g0_mode)) {
      if (e->g0.size() != d) throw DimensionError(d, e->g0.size());
      if (!e->g0.all_finite()) throw ValidationError("explicit g0 must be finite");
    }
  }
};

struct PageState {
  std::uint64_t t = 0;
  Vector x;
  Vector g;
  std::uint64_t grad_calls = 0;          // Algorithm cost only.
  std::uint64_t verification_calls = 0;  // Monitoring cost (records, psi).
  CounterRng rng;
};

/// One coin/index draw. `heads` means a fresh full gradient.
struct Outcome {
  bool heads = true;
  std::size_t index = 0;
};

inline double expected_grad_calls_per_iter(double p, std::size_t n) {
  return p * static_cast<double>(n) + 2.0 * (1.0 - p);
}

inline double expected_grad_calls_per_iter(const PageConfig& config, std::size_t n) {
  return expected_grad_calls_per_iter(config.p, n);
}

template <FiniteSum P>
PageState init(const P& problem, const Vector& x0, const PageConfig& config) {
  config.validate(problem.d());
  if (x0.size() != problem.d()) throw DimensionError(problem.d(), x0.size());
  if (!x0.all_finite()) throw ValidationError("x0 must be finite");
  PageState s;
  s.x = x0;
  s.rng = CounterRng(config.seed);
  if (std::holds_alternative<FullGradientInit>(config.g0_mode)) {
    s.g = problem.full_gradient(x0);
    s.grad_calls = problem.n();
    if (!s.g.all_finite()) throw NumericalError("non-finite gradient at x0");
  } else if (std::holds_alternative<ZeroInit>(config.g0_mode)) {
    s.g = Vector(problem.d());
  } else {
    s.g = std::get<ExplicitInit>(config.g0_mode).g0;
  }
  return s;
}

/// Draws (theta, i) from the state's stream: coin first, index only on tails.
inline Outcome draw_outcome(CounterRng& rng, double p, std::size_t n) {
  Outcome o;
  o.heads = rng.bernoulli(p);
  if (!o.heads) o.index = static_cast<std::size_t>(rng.below(n));
  return o;
}

/// Advances the state with a dictated outcome; the RNG is not touched.
///
/// x' = x - gamma g; then g' = grad f(x') on heads, or
/// g' = g + (grad f_i(x') - grad f_i(x)) on tails.
template <FiniteSum P>
void step_with(PageState& s, const P& problem, const PageConfig& config, const Outcome& o) {
  Vector x_next = s.x;
  x_next.add_scaled(-config.gamma, s.g);
  if (!x_next.all_finite()) throw DivergenceError(s.t, config.gamma, "non-finite iterate");
  if (o.heads) {
    s.g = problem.full_gradient(x_next);
    s.grad_calls += problem.n();
  } else {
    if (o.index >= problem.n()) throw ValidationError("forced index out of range");
    Vector diff = problem.component_gradient(o.index, x_next);
    diff -= problem.component_gradient(o.index, s.x);
    s.g += diff;
    s.grad_calls += 2;
  }
  if (!s.g.all_finite()) throw DivergenceError(s.t, config.gamma, "non-finite gradient estimate");
  s.x = std::move(x_next);
  ++s.t;
}

template <FiniteSum P>
void step(PageState& s, const P& problem, const PageConfig& config) {
  // The draw happens after x' in Algorithm order; x' does not depend on it,
  // so drawing first here is equivalent and keeps step_with RNG-free.
  const Outcome o = draw_outcome(s.rng, config.p, problem.n());
  step_with(s, problem, config, o);
}

template <FiniteSum P>
PageState stepped(PageState s, const P& problem, const PageConfig& config, const Outcome& o) {
  step_with(s, problem, config, o);
  return s;
}

struct TrajectoryRecord {
  std::uint64_t t = 0;
  double f_gap = 0.0;  // f(x) - f*, or f(x) when f* is unknown
  double grad_norm_sq = 0.0;
  double g_norm_sq = 0.0;
  double psi = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t grad_calls = 0;
};

struct RunOptions {
  std::uint64_t stride = 1;
  // When set, psi is filled in every record.
  std::optional<LyapunovCoefficients> psi_coefficients;
};

template <FiniteSum P>
TrajectoryRecord make_record(PageState& s, const P& problem, const PageConfig& config,
                             const RunOptions& opts) {
  const Vector grad = problem.full_gradient(s.x);
  s.verification_calls += problem.n();
  const auto& prof = problem.profile();
  TrajectoryRecord r;
  r.t = s.t;
  r.f_gap = problem.value(s.x) - prof.f_star.value_or(0.0);
  r.grad_norm_sq = squared_norm(grad);
  r.g_norm_sq = squared_norm(s.g);
  r.grad_calls = s.grad_calls;
  if (opts.psi_coefficients) {
    const double err = squared_distance(s.g, grad);
    r.psi = lyapunov_terms(problem.value(s.x) - prof.require_f_star(), r.grad_norm_sq, err,
                           r.g_norm_sq, *opts.psi_coefficients, config.gamma, config.p)
                .psi;
  }
  return r;
}

/// Runs T iterations, recording t = 0, stride, 2*stride, ... and always T.
/// The recorder, if any, sees each record as it is produced.
template <FiniteSum P>
std::vector<TrajectoryRecord> run(const P& problem, const Vector& x0, const PageConfig& config,
                                  std::uint64_t T, const RunOptions& opts = {},
                                  const std::function<void(const TrajectoryRecord&)>& recorder = {}) {
  if (opts.stride == 0) throw ValidationError("record stride must be >= 1");
  PageState s = init(problem, x0, config);
  std::vector<TrajectoryRecord> out;
  out.reserve(static_cast<std::size_t>(T / opts.stride + 2));
  auto emit = [&] {
    out.push_back(make_record(s, problem, config, opts));
    if (recorder) recorder(out.back());
  };
  emit();
  while (s.t < T) {
    step(s, problem, config);
    if (s.t % opts.stride == 0 || s.t == T) emit();
  }
  return out;
}

}  // namespace page
