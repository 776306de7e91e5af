#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "page/analysis.hpp"
#include "page/core.hpp"
#include "page/errors.hpp"
#include "page/rng.hpp"

namespace page {

enum class ProblemFamily { InterpolatedQuadratic, Logistic, HalfSquare, CustomQuadratic };

inline const char* to_string(ProblemFamily f) {
  switch (f) {
    case ProblemFamily::InterpolatedQuadratic: return "interpolated_quadratic";
    case ProblemFamily::Logistic: return "logistic";
    case ProblemFamily::HalfSquare: return "half_square";
    case ProblemFamily::CustomQuadratic: return "custom_quadratic";
  }
  return "?";
}

inline ProblemFamily family_from_string(const std::string& s) {
  for (auto f : {ProblemFamily::InterpolatedQuadratic, ProblemFamily::Logistic,
                 ProblemFamily::HalfSquare, ProblemFamily::CustomQuadratic})
    if (s == to_string(f)) return f;
  throw ValidationError("unknown problem family '" + s + "'");
}

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::InterpolatedQuadratic;
  std::size_t n = 1;
  std::size_t d = 1;
  double L = 1.0;
  double tau = 0.0;
  std::optional<double> mu;
  std::uint64_t seed = 0;
  // custom_quadratic only: one row of diagonal curvatures per component.
  std::vector<std::vector<double>> curvatures;
};

/// f_i(x) = 1/2 sum_k c_ik x_k^2 with diagonal curvatures, so every spectral
/// constant is read off the entries.
class QuadraticSum final : public FiniteSumProblem {
 public:
  QuadraticSum(std::vector<Vector> curvatures, SmoothnessProfile profile, std::string family)
      : curv_(std::move(curvatures)), profile_(std::move(profile)), family_(std::move(family)) {
    if (curv_.empty()) throw ValidationError("quadratic sum needs at least one component");
    const std::size_t d = curv_.front().size();
    if (d == 0) throw ValidationError("dimension must be >= 1");
    mean_ = Vector(d);
    for (const auto& c : curv_) {
      if (c.size() != d) throw DimensionError(d, c.size());
      if (!c.all_finite()) throw ValidationError("curvatures must be finite");
      mean_ += c;
    }
    mean_ *= 1.0 / static_cast<double>(curv_.size());
  }

  std::size_t n() const override { return curv_.size(); }
  std::size_t d() const override { return mean_.size(); }
  const SmoothnessProfile& profile() const override { return profile_; }
  std::string family() const override { return family_; }

  const Vector& curvature(std::size_t i) const { return curv_.at(i); }
  const Vector& mean_curvature() const { return mean_; }

  double component_value(std::size_t i, const Vector& x) const override {
    return half_quadratic(curv_.at(i), x);
  }
  Vector component_gradient(std::size_t i, const Vector& x) const override {
    return hadamard(curv_.at(i), x);
  }
  double value(const Vector& x) const override { return half_quadratic(mean_, x); }
  Vector full_gradient(const Vector& x) const override { return hadamard(mean_, x); }

 private:
  double half_quadratic(const Vector& c, const Vector& x) const {
    check_point(x);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += c[k] * x[k] * x[k];
    return 0.5 * s;
  }
  Vector hadamard(const Vector& c, const Vector& x) const {
    check_point(x);
    Vector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = c[k] * x[k];
    return out;
  }

  std::vector<Vector> curv_;
  Vector mean_;
  SmoothnessProfile profile_;
  std::string family_;
};

namespace detail {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// 1 / (1 + exp(-z))
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// f_i(x) = log(1 + exp(-y_i <a_i, x>)), labels in {-1, +1}.
class LogisticSum final : public FiniteSumProblem {
 public:
  LogisticSum(std::vector<Vector> features, std::vector<double> labels, SmoothnessProfile profile,
              bool has_minimizer)
      : a_(std::move(features)), y_(std::move(labels)), profile_(std::move(profile)),
        has_minimizer_(has_minimizer) {
    if (a_.empty() || a_.size() != y_.size())
      throw ValidationError("logistic sum needs matching, nonempty features and labels");
    for (const auto& ai : a_)
      if (ai.size() != a_.front().size()) throw DimensionError(a_.front().size(), ai.size());
    for (double yi : y_)
      if (yi != 1.0 && yi != -1.0) throw ValidationError("logistic labels must be +1 or -1");
  }

  std::size_t n() const override { return a_.size(); }
  std::size_t d() const override { return a_.front().size(); }
  const SmoothnessProfile& profile() const override { return profile_; }
  std::string family() const override { return "logistic"; }
  bool has_minimizer() const { return has_minimizer_; }

  const Vector& feature(std::size_t i) const { return a_.at(i); }
  double label(std::size_t i) const { return y_.at(i); }

  double margin(std::size_t i, const Vector& x) const { return y_[i] * dot(a_[i], x); }

  double component_value(std::size_t i, const Vector& x) const override {
    check_point(x);
    return detail::softplus(-margin(i, x));
  }

  Vector component_gradient(std::size_t i, const Vector& x) const override {
    check_point(x);
    const double w = -y_[i] * detail::sigmoid(-margin(i, x));
    return w * a_[i];
  }

  Vector full_gradient(const Vector& x) const override {
    check_point(x);
    Vector acc(d());
    for (std::size_t i = 0; i < n(); ++i) acc.add_scaled(-y_[i] * detail::sigmoid(-margin(i, x)), a_[i]);
    acc *= 1.0 / static_cast<double>(n());
    return acc;
  }

 private:
  std::vector<Vector> a_;
  std::vector<double> y_;
  SmoothnessProfile profile_;
  bool has_minimizer_;
};

namespace problems {

inline constexpr double kDefaultMuFraction = 0.01;

inline void validate_targets(const ProblemSpec& spec) {
  if (spec.n == 0 || spec.d == 0) throw ValidationError("n and d must be >= 1");
  SmoothnessProfile{spec.L, spec.tau, spec.mu, std::nullopt}.validate();
}

namespace detail {

inline void shuffle(std::vector<std::size_t>& v, CounterRng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
}

// Zero-sum pattern of n multipliers in {+1, -1, -1/2}; exact in floating point.
inline std::vector<double> zero_sum_pattern(std::size_t n) {
  std::vector<double> w(n, 0.0);
  std::size_t k = 0;
  if (n % 2 == 1 && n >= 3) {
    w[0] = 1.0;
    w[1] = -0.5;
    w[2] = -0.5;
    k = 3;
  }
  for (; k + 1 < n; k += 2) {
    w[k] = 1.0;
    w[k + 1] = -1.0;
  }
  return w;
}

}  // namespace detail

/// Diagonal quadratic family spanning tau in [0, L].
///
/// f = 1/2 x^T D x with D in [mu, L] (D_0 = mu, D_{d-1} = L, interior
/// log-uniform). Component i adds a zero-mean perturbation E_i with
/// |E_ik| <= s_k = min(tau, L - D_k), so every curvature lies in [-tau, L].
/// f* = 0 at x = 0 and f is mu-PL.
inline std::unique_ptr<QuadraticSum> interpolated_quadratic(const ProblemSpec& spec) {
  validate_targets(spec);
  const double L = spec.L;
  const double tau = spec.tau;
  const double mu = spec.mu.value_or(kDefaultMuFraction * L);
  if (tau > 0.0 && spec.n < 2)
    throw ValidationError("interpolated_quadratic: tau > 0 needs n >= 2 (perturbations must cancel)");
  if (mu > L) throw ValidationError("interpolated_quadratic: mu must not exceed L");

  CounterRng rng(spec.seed);
  Vector diag(spec.d);
  for (std::size_t k = 0; k < spec.d; ++k) {
    if (k == 0) diag[k] = mu;
    else if (k + 1 == spec.d) diag[k] = L;
    else diag[k] = mu * std::pow(L / mu, rng.uniform01());
  }

  const auto pattern = detail::zero_sum_pattern(spec.n);
  std::vector<Vector> curv(spec.n, diag);
  std::vector<std::size_t> order(spec.n);
  for (std::size_t k = 0; k < spec.d; ++k) {
    const double s = std::min(tau, L - diag[k]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::shuffle(order, rng);
    for (std::size_t j = 0; j < spec.n; ++j) curv[order[j]][k] = diag[k] + pattern[j] * s;
  }
  SmoothnessProfile prof{L, tau, mu, 0.0};
  return std::make_unique<QuadraticSum>(std::move(curv), prof, "interpolated_quadratic");
}

/// Certified constants from explicit diagonal curvatures: L = max |c|,
/// tau = max(0, -min c), mu = smallest positive mean curvature, f* = 0.
/// The mean curvature must be nonnegative (f bounded below).
inline std::unique_ptr<QuadraticSum> custom_quadratic(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("custom_quadratic needs at least one component");
  std::vector<Vector> curv;
  curv.reserve(rows.size());
  for (const auto& r : rows) curv.emplace_back(r);
  double L = 0.0, lo = 0.0;
  for (const auto& c : curv)
    for (double v : c) {
      L = std::max(L, std::abs(v));
      lo = std::min(lo, v);
    }
  if (!(L > 0.0)) throw ValidationError("custom_quadratic: all curvatures are zero");
  auto tmp = QuadraticSum(curv, SmoothnessProfile{}, "custom_quadratic");
  std::optional<double> mu;
  for (double m : tmp.mean_curvature()) {
    if (m < 0.0) throw ValidationError("custom_quadratic: negative mean curvature, f is unbounded below");
    if (m > 0.0) mu = mu ? std::min(*mu, m) : m;
  }
  SmoothnessProfile prof{L, std::min(-lo, L), mu, 0.0};
  return std::make_unique<QuadraticSum>(std::move(curv), prof, "custom_quadratic");
}

/// f(x1, x2) = x1^2 / 2: 1-PL, not strongly convex.
inline std::unique_ptr<QuadraticSum> half_square() {
  return std::make_unique<QuadraticSum>(std::vector<Vector>{Vector{1.0, 0.0}},
                                        SmoothnessProfile{1.0, 0.0, 1.0, 0.0}, "half_square");
}

struct LogisticReference {
  double f_star = 0.0;
  bool has_minimizer = true;
  std::uint64_t iterations = 0;
};

/// Infimum of a logistic sum by plain gradient descent with step 1/L.
///
/// Stops at |grad f| <= 1e-12 (minimizer found) or as soon as the iterate
/// strictly separates the data, which proves inf f = 0 with no minimizer.
inline LogisticReference logistic_reference(const LogisticSum& prob, std::uint64_t max_iter = 2'000'000) {
  Vector x(prob.d());
  const double step = 1.0 / prob.profile().L;
  LogisticReference ref;
  for (std::uint64_t it = 0; it < max_iter; ++it) {
    const Vector g = prob.full_gradient(x);
    if (squared_norm(g) <= 1e-24) {
      ref.f_star = prob.value(x);
      ref.iterations = it;
      return ref;
    }
    if (it % 256 == 0) {
      bool separated = true;
      for (std::size_t i = 0; i < prob.n() && separated; ++i) separated = prob.margin(i, x) > 0.0;
      if (separated) {
        ref.f_star = 0.0;
        ref.has_minimizer = false;
        ref.iterations = it;
        return ref;
      }
    }
    x.add_scaled(-step, g);
  }
  throw NumericalError("logistic reference minimization did not converge");
}

/// Logistic sum from explicit data; tau = 0, L = max_i |a_i|^2 / 4, f* from
/// the reference minimization.
inline std::unique_ptr<LogisticSum> logistic_from_data(std::vector<Vector> features,
                                                       std::vector<double> labels) {
  double L = 0.0;
  for (const auto& a : features) L = std::max(L, squared_norm(a) / 4.0);
  if (!(L > 0.0)) throw ValidationError("logistic: all features are zero");
  LogisticSum probe(features, labels, SmoothnessProfile{L, 0.0, std::nullopt, std::nullopt}, true);
  const auto ref = logistic_reference(probe);
  return std::make_unique<LogisticSum>(std::move(features), std::move(labels),
                                       SmoothnessProfile{L, 0.0, std::nullopt, ref.f_star},
                                       ref.has_minimizer);
}

/// Gaussian features rescaled so that max_i |a_i|^2 / 4 = spec.L; labels drawn
/// from a planted logistic model.
inline std::unique_ptr<LogisticSum> logistic(const ProblemSpec& spec) {
  if (spec.n == 0 || spec.d == 0) throw ValidationError("n and d must be >= 1");
  if (!(spec.L > 0.0)) throw ValidationError("require L > 0");
  if (spec.tau != 0.0) throw ValidationError("logistic components are convex: tau must be 0");
  if (spec.mu) throw ValidationError("logistic instances carry no PL constant");
  CounterRng rng(spec.seed);
  std::vector<Vector> a(spec.n, Vector(spec.d));
  double max_sq = 0.0;
  for (auto& ai : a) {
    for (std::size_t k = 0; k < spec.d; ++k) ai[k] = rng.normal();
    max_sq = std::max(max_sq, squared_norm(ai));
  }
  const double scale = std::sqrt(4.0 * spec.L / max_sq);
  for (auto& ai : a) ai *= scale;
  Vector w(spec.d);
  for (std::size_t k = 0; k < spec.d; ++k) w[k] = rng.normal() / (scale * std::sqrt(double(spec.d)));
  std::vector<double> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i)
    y[i] = rng.uniform01() < page::detail::sigmoid(dot(a[i], w)) ? 1.0 : -1.0;
  return logistic_from_data(std::move(a), std::move(y));
}

inline std::unique_ptr<FiniteSumProblem> make_problem(const ProblemSpec& spec) {
  switch (spec.family) {
    case ProblemFamily::InterpolatedQuadratic: return interpolated_quadratic(spec);
    case ProblemFamily::Logistic: return logistic(spec);
    case ProblemFamily::HalfSquare: return half_square();
    case ProblemFamily::CustomQuadratic: return custom_quadratic(spec.curvatures);
  }
  throw ValidationError("unknown family");
}

// ---------------------------------------------------------------------------
// Certification

struct CertificationReport {
  std::size_t samples = 0;
  double lipschitz_slack = 0.0;  // worst L^2|dx|^2 - |dg|^2
  double weak_convexity_slack = 0.0;     // worst weak-convexity slack
  std::optional<double> pl_slack;          // worst |grad f|^2 - 2 mu (f - f*)
  std::optional<double> lower_bound_slack;  // worst f(x) - f*
  bool pass = true;
  std::string failure;
};

namespace detail {

inline Vector gaussian(std::size_t d, double scale, CounterRng& rng) {
  Vector v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return v;
}

inline std::string describe(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
  os << ")";
  return os.str();
}

}  // namespace detail

/// Samples points and pairs and checks every inequality the profile claims.
/// Throws CertificationError on the first violation beyond 1e-9 * scale
/// unless `throw_on_failure` is false, in which case the report says so.
inline CertificationReport certify(const FiniteSumProblem& prob, std::size_t samples, CounterRng& rng,
                                   double scale = 2.0, bool throw_on_failure = true) {
  if (samples == 0) throw ValidationError("certify needs samples >= 1");
  const auto& prof = prob.profile();
  CertificationReport rep;
  rep.samples = samples;
  rep.lipschitz_slack = rep.weak_convexity_slack = std::numeric_limits<double>::infinity();
  auto fail = [&](const std::string& msg) {
    if (rep.pass) {
      rep.pass = false;
      rep.failure = msg;
    }
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = rng.below(prob.n());
    const Vector x = detail::gaussian(prob.d(), scale, rng);
    const Vector y = detail::gaussian(prob.d(), scale, rng);
    auto grad_i = [&](const Vector& z) { return prob.component_gradient(i, z); };

    const double dg = squared_distance(grad_i(x), grad_i(y));
    const auto lip = analysis::make_slack(dg, prof.L * prof.L * squared_distance(x, y));
    rep.lipschitz_slack = std::min(rep.lipschitz_slack, lip.slack);
    if (!lip.pass())
      fail("L-Lipschitz gradient violated for component " + std::to_string(i) + " at x=" +
           detail::describe(x) + ", y=" + detail::describe(y));

    const auto l2 = analysis::check_lemma2(grad_i, prof.L, prof.tau, x, y);
    rep.weak_convexity_slack = std::min(rep.weak_convexity_slack, l2.slack);
    if (!l2.pass())
      fail("weak-convexity inequality (L, tau) violated for component " + std::to_string(i) +
           " at x=" + detail::describe(x) + ", y=" + detail::describe(y));

    if (prof.f_star) {
      const double gap = prob.value(x) - *prof.f_star;
      rep.lower_bound_slack = std::min(rep.lower_bound_slack.value_or(gap), gap);
      if (gap < -1e-12 * std::max(1.0, std::abs(*prof.f_star)))
        fail("f >= f* violated at x=" + detail::describe(x));
      if (prof.mu) {
        const auto pl = analysis::make_slack(2.0 * *prof.mu * gap, squared_norm(prob.full_gradient(x)));
        rep.pl_slack = std::min(rep.pl_slack.value_or(pl.slack), pl.slack);
        if (!pl.pass()) fail("PL inequality |grad f|^2 >= 2 mu (f - f*) violated at x=" + detail::describe(x));
      }
    }
  }
  if (!rep.pass && throw_on_failure) throw CertificationError(rep.failure);
  return rep;
}

}  // namespace problems
}  // namespace page
