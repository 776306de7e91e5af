#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "page/errors.hpp"

namespace page {

/// Dense real vector with checked dimensions.
///
/// Binary operations throw DimensionError when sizes differ. Entries are not
/// checked for finiteness on every operation; callers that admit values into
/// algorithm state use `all_finite()`.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t d, double fill = 0.0) : data_(d, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t k) const { return data_[k]; }
  double& operator[](std::size_t k) { return data_[k]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Vector& operator+=(const Vector& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Vector& operator-=(const Vector& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Vector& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  // this += s * o
  Vector& add_scaled(double s, const Vector& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    return *this;
  }

  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(double s, Vector a) noexcept { return a *= s; }
  friend Vector operator*(Vector a, double s) noexcept { return a *= s; }

  friend bool operator==(const Vector&, const Vector&) = default;

  void check_same(const Vector& o) const {
    if (o.size() != size()) throw DimensionError(size(), o.size());
  }

 private:
  std::vector<double> data_;
};

inline double dot(const Vector& a, const Vector& b) {
  a.check_same(b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double squared_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// ||a - b||^2 without a temporary.
inline double squared_distance(const Vector& a, const Vector& b) {
  a.check_same(b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Assumption bundle: L-smooth components, tau-weakly convex components,
/// optional PL constant mu of the average, optional infimum f_star.
struct SmoothnessProfile {
  double L = 1.0;
  double tau = 0.0;
  std::optional<double> mu;
  std::optional<double> f_star;

  double kappa() const {
    if (!mu) throw ValidationError("kappa requires the PL constant mu");
    return L / *mu;
  }

  void validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw ValidationError("require L > 0");
    if (!(tau >= 0.0) || !(tau <= L)) throw ValidationError("require 0 <= tau <= L");
    if (mu && (!(*mu > 0.0) || !(*mu <= L)))
      throw ValidationError("require 0 < mu <= L");
    if (f_star && !std::isfinite(*f_star)) throw ValidationError("f_star must be finite");
  }

  double require_f_star() const {
    if (!f_star) throw ValidationError("f_star is required to evaluate the Lyapunov function");
    return *f_star;
  }
};

/// Oracle for f = (1/n) sum_i f_i.
///
/// Implementations must be pure in (i, x) and safe for concurrent const use.
/// The defaults for `value` and `full_gradient` average the components;
/// concrete problems override them with cheaper closed forms that must agree
/// with the average to roundoff.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t n() const = 0;
  virtual std::size_t d() const = 0;
  virtual const SmoothnessProfile& profile() const = 0;
  virtual std::string family() const = 0;

  virtual double component_value(std::size_t i, const Vector& x) const = 0;
  virtual Vector component_gradient(std::size_t i, const Vector& x) const = 0;

  virtual double value(const Vector& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += component_value(i, x);
    return s / static_cast<double>(n());
  }

  virtual Vector full_gradient(const Vector& x) const {
    Vector acc(d());
    for (std::size_t i = 0; i < n(); ++i) acc += component_gradient(i, x);
    acc *= 1.0 / static_cast<double>(n());
    return acc;
  }

  void check_point(const Vector& x) const {
    if (x.size() != d()) throw DimensionError(d(), x.size());
  }
};

template <typename P>
concept FiniteSum = requires(const P& p, std::size_t i, const Vector& x) {
  { p.n() } -> std::convertible_to<std::size_t>;
  { p.d() } -> std::convertible_to<std::size_t>;
  { p.profile() } -> std::convertible_to<const SmoothnessProfile&>;
  { p.component_gradient(i, x) } -> std::convertible_to<Vector>;
  { p.full_gradient(x) } -> std::convertible_to<Vector>;
  { p.value(x) } -> std::convertible_to<double>;
};

/// (1/n) sum_i grad f_i(x), evaluated component by component.
///
/// Throws DimensionError on a wrong-sized x and NumericalError naming the
/// first component whose gradient is not finite.
template <FiniteSum P>
Vector mean_gradient(const P& problem, const Vector& x) {
  if (x.size() != problem.d()) throw DimensionError(problem.d(), x.size());
  if (!x.all_finite()) throw NumericalError("mean_gradient: non-finite point");
  Vector acc(problem.d());
  for (std::size_t i = 0; i < problem.n(); ++i) {
    Vector gi = problem.component_gradient(i, x);
    if (gi.size() != problem.d()) throw DimensionError(problem.d(), gi.size());
    if (!gi.all_finite())
      throw NumericalError("mean_gradient: non-finite gradient from component " +
                           std::to_string(i));
    acc += gi;
  }
  acc *= 1.0 / static_cast<double>(problem.n());
  return acc;
}

}  // namespace page
