#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "page/core.hpp"
#include "page/errors.hpp"
#include "page/estimator.hpp"

namespace page::analysis {

/// lhs <= rhs, reported as slack = rhs - lhs.
struct InequalitySlack {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;

  // slack >= -1e-9 max(1, |rhs|)
  bool pass(double rel_tol = 1e-9) const { return slack >= -rel_tol * std::max(1.0, std::abs(rhs)); }
};

inline InequalitySlack make_slack(double lhs, double rhs) { return {lhs, rhs, rhs - lhs}; }

/// |grad g(x) - grad g(y)|^2 <= (L - tau) <grad g(x) - grad g(y), x - y> + L tau |x - y|^2
/// for L-smooth, tau-weakly convex g.
template <typename GradFn>
InequalitySlack check_lemma2(GradFn&& grad, double L, double tau, const Vector& x, const Vector& y) {
  const Vector dg = grad(x) - grad(y);
  const Vector dx = x - y;
  return make_slack(squared_norm(dg), (L - tau) * dot(dg, dx) + L * tau * squared_norm(dx));
}

/// grad g + L Id is 1/(2L)-cocoercive:
/// |u|^2 <= 2L <u, x - y>, u = grad g(x) + L x - grad g(y) - L y.
template <typename GradFn>
InequalitySlack check_lemma1_monotonicity(GradFn&& grad, double L, const Vector& x, const Vector& y) {
  Vector u = grad(x) - grad(y);
  const Vector dx = x - y;
  u.add_scaled(L, dx);
  return make_slack(squared_norm(u), 2.0 * L * dot(u, dx));
}

/// Central differences, one coordinate at a time.
template <typename ValueFn>
Vector finite_difference_gradient(ValueFn&& value, const Vector& x, double h) {
  if (!(h > 0.0)) throw ValidationError("finite difference step must be positive");
  Vector out(x.size());
  Vector probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = value(probe);
    probe[k] = x[k] - h;
    const double down = value(probe);
    probe[k] = x[k];
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

inline constexpr double kRateFloor = 1e-14;
inline constexpr std::size_t kMinRatePoints = 10;

/// exp of the least-squares slope of log(psi_t) against t. The series is
/// cut at its first value below 1e-14.
inline double fit_linear_rate(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw DimensionError(times.size(), values.size());
  std::size_t usable = 0;
  while (usable < values.size() && values[usable] >= kRateFloor && std::isfinite(values[usable]))
    ++usable;
  if (usable < kMinRatePoints)
    throw ValidationError("rate fit needs at least 10 points above the floor, got " +
                          std::to_string(usable));
  double mt = 0.0, ml = 0.0;
  for (std::size_t k = 0; k < usable; ++k) {
    mt += times[k];
    ml += std::log(values[k]);
  }
  mt /= static_cast<double>(usable);
  ml /= static_cast<double>(usable);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < usable; ++k) {
    const double dt = times[k] - mt;
    sxy += dt * (std::log(values[k]) - ml);
    sxx += dt * dt;
  }
  return std::exp(sxy / sxx);
}

inline double fit_linear_rate(std::span<const double> values) {
  std::vector<double> times(values.size());
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = static_cast<double>(k);
  return fit_linear_rate(times, values);
}

/// (1/(T+1)) sum_t |grad f(x^t)|^2, i.e. E|grad f(x~T)|^2 over the uniform
/// output index. Records must cover every t = 0..T.
inline double average_grad_norm(std::span<const TrajectoryRecord> records) {
  if (records.empty()) throw ValidationError("average_grad_norm needs at least one record");
  double s = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].t != k) throw ValidationError("average_grad_norm needs stride-1 records");
    s += records[k].grad_norm_sq;
  }
  return s / static_cast<double>(records.size());
}

}  // namespace page::analysis
