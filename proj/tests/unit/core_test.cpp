#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "page/core.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"

namespace page {
namespace {

// f_1(x) = x, f_2(x) = -x in one dimension.
class CancellingLinear final : public FiniteSumProblem {
 public:
  std::size_t n() const override { return 2; }
  std::size_t d() const override { return 1; }
  const SmoothnessProfile& profile() const override { return prof_; }
  std::string family() const override { return "cancelling_linear"; }
  double component_value(std::size_t i, const Vector& x) const override { return i == 0 ? x[0] : -x[0]; }
  Vector component_gradient(std::size_t i, const Vector&) const override { return Vector{i == 0 ? 1.0 : -1.0}; }

 private:
  SmoothnessProfile prof_{1.0, 0.0, std::nullopt, std::nullopt};
};

class NanComponent final : public FiniteSumProblem {
 public:
  std::size_t n() const override { return 3; }
  std::size_t d() const override { return 2; }
  const SmoothnessProfile& profile() const override { return prof_; }
  std::string family() const override { return "nan_component"; }
  double component_value(std::size_t, const Vector&) const override { return 0.0; }
  Vector component_gradient(std::size_t i, const Vector&) const override {
    return i == 1 ? Vector{0.0, std::nan("")} : Vector{1.0, 1.0};
  }

 private:
  SmoothnessProfile prof_{};
};

TEST(SquaredNorm, KnownValues) {
  EXPECT_EQ(squared_norm(Vector{3.0, 4.0}), 25.0);
  EXPECT_EQ(squared_norm(Vector(5)), 0.0);
}

TEST(SquaredNorm, MatchesReverseOrderAccumulation) {
  CounterRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(1 + rng.below(20));
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = rng.normal();
    long double oracle = 0.0L;
    for (std::size_t k = v.size(); k-- > 0;) oracle += static_cast<long double>(v[k]) * v[k];
    EXPECT_NEAR(squared_norm(v), static_cast<double>(oracle), 1e-13 * static_cast<double>(oracle));
  }
}

TEST(SquaredNorm, HomogeneousOfDegreeTwo) {
  CounterRng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector v(1 + rng.below(10));
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = rng.normal();
    const double alpha = 10.0 * rng.normal();
    const double lhs = squared_norm(alpha * v);
    const double rhs = alpha * alpha * squared_norm(v);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(rhs, 1e-300));
  }
}

TEST(Vector, DimensionMismatchThrows) {
  EXPECT_THROW(Vector(2) + Vector(3), DimensionError);
  EXPECT_THROW(dot(Vector(2), Vector(1)), DimensionError);
  EXPECT_FALSE((Vector{1.0, std::numeric_limits<double>::infinity()}.all_finite()));
}

TEST(MeanGradient, SingleQuadratic) {
  const auto prob = problems::custom_quadratic({{1.0}});
  EXPECT_EQ(mean_gradient(*prob, Vector{3.0}), Vector{3.0});
}

TEST(MeanGradient, CancellingComponents) {
  CancellingLinear prob;
  for (double x : {-4.0, 0.0, 2.5}) EXPECT_EQ(mean_gradient(prob, Vector{x})[0], 0.0);
}

TEST(MeanGradient, MatchesDirectSummationOnRandomQuadratics) {
  CounterRng rng(11);
  std::vector<std::vector<double>> rows(3, std::vector<double>(4));
  for (auto& r : rows)
    for (double& c : r) c = 0.5 + rng.uniform01();
  const auto prob = problems::custom_quadratic(rows);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(4);
    for (std::size_t k = 0; k < 4; ++k) x[k] = rng.normal();
    const Vector g = mean_gradient(*prob, x);
    for (std::size_t k = 0; k < 4; ++k) {
      const double oracle = (rows[0][k] * x[k] + rows[1][k] * x[k] + rows[2][k] * x[k]) / 3.0;
      EXPECT_NEAR(g[k], oracle, 1e-15 * (1.0 + std::abs(oracle)));
    }
  }
}

TEST(MeanGradient, Errors) {
  const auto prob = problems::custom_quadratic({{1.0, 2.0}});
  EXPECT_THROW(mean_gradient(*prob, Vector{1.0}), DimensionError);
  NanComponent bad;
  try {
    mean_gradient(bad, Vector{0.0, 0.0});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("component 1"), std::string::npos);
  }
}

TEST(FiniteSumProblem, FullGradientIsMeanOfComponents) {
  CounterRng rng(5);
  std::vector<std::unique_ptr<FiniteSumProblem>> probs;
  ProblemSpec q;
  q.n = 7;
  q.d = 4;
  q.L = 3.0;
  q.tau = 1.5;
  q.seed = 9;
  probs.push_back(problems::interpolated_quadratic(q));
  ProblemSpec lg;
  lg.family = ProblemFamily::Logistic;
  lg.n = 12;
  lg.d = 3;
  lg.seed = 2;
  probs.push_back(problems::logistic(lg));
  probs.push_back(problems::half_square());
  for (const auto& prob : probs) {
    for (int trial = 0; trial < 1000; ++trial) {
      Vector x(prob->d());
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = 3.0 * rng.normal();
      const Vector full = prob->full_gradient(x);
      const Vector mean = mean_gradient(*prob, x);
      const double scale = std::max(std::sqrt(squared_norm(mean)), 1e-300);
      EXPECT_LE(std::sqrt(squared_distance(full, mean)), 1e-12 * std::max(scale, 1.0)) << prob->family();
    }
  }
}

TEST(SmoothnessProfile, Validation) {
  EXPECT_THROW((SmoothnessProfile{0.0, 0.0, {}, {}}.validate()), ValidationError);
  EXPECT_THROW((SmoothnessProfile{1.0, 2.0, {}, {}}.validate()), ValidationError);
  EXPECT_THROW((SmoothnessProfile{1.0, 0.5, 2.0, {}}.validate()), ValidationError);
  EXPECT_NO_THROW((SmoothnessProfile{1.0, 1.0, 1.0, 0.0}.validate()));
  EXPECT_DOUBLE_EQ((SmoothnessProfile{10.0, 0.0, 0.2, {}}.kappa()), 50.0);
  EXPECT_THROW((SmoothnessProfile{}.kappa()), ValidationError);
  EXPECT_THROW((SmoothnessProfile{}.require_f_star()), ValidationError);
}

}  // namespace
}  // namespace page
