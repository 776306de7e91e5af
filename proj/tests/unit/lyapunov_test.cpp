#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "page/lyapunov.hpp"
#include "page/problems.hpp"

namespace page {
namespace {

PageState make_state(const Vector& x, const Vector& g) {
  PageState s;
  s.x = x;
  s.g = g;
  return s;
}

PageConfig config(double gamma, double p, InitMode g0 = FullGradientInit{}, std::uint64_t seed = 0) {
  PageConfig c;
  c.gamma = gamma;
  c.p = p;
  c.g0_mode = std::move(g0);
  c.seed = seed;
  return c;
}

TEST(Evaluate, HandComputedPsi) {
  const auto prob = problems::custom_quadratic({{1.0}});
  const auto s = make_state(Vector{1.0}, Vector{0.5});
  std::uint64_t calls = 0;
  const auto v = lyapunov::evaluate(s, *prob, {1.0, 0.0, CoefficientMode::Linear}, 0.1, 0.5, &calls);
  EXPECT_DOUBLE_EQ(v.psi, 0.55);
  EXPECT_EQ(calls, 1u);
  const auto w = lyapunov::evaluate(s, *prob, {0.75, 0.25, CoefficientMode::Linear}, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(w.suboptimality, 0.5);
  EXPECT_DOUBLE_EQ(w.gradient_term, -0.025);
  EXPECT_DOUBLE_EQ(w.error_term, 0.0375);
  EXPECT_DOUBLE_EQ(w.estimator_term, 0.0125);
  EXPECT_DOUBLE_EQ(w.psi, 0.525);
}

TEST(Evaluate, VanishesAtStationaryExactState) {
  const auto prob = problems::custom_quadratic({{2.0, 1.0}, {0.0, 3.0}});
  const auto s = make_state(Vector{0.0, 0.0}, Vector{0.0, 0.0});
  const LyapunovCoefficients c{0.8, 0.2, CoefficientMode::Linear};
  EXPECT_EQ(lyapunov::evaluate(s, *prob, c, 0.1, 0.3).psi, 0.0);
  EXPECT_EQ(lyapunov::exact_conditional_expectation(s, *prob, c, 0.1, 0.3), 0.0);
}

TEST(ExactExpectation, HandComputedTwoComponents) {
  // f_1 = x^2, f_2 = 0; heads psi = 0.125, both tails psi = 0.375.
  const auto prob = problems::custom_quadratic({{2.0}, {0.0}});
  const auto s = make_state(Vector{1.0}, Vector{1.0});
  const LyapunovCoefficients c{1.0, 0.0, CoefficientMode::Linear};
  EXPECT_DOUBLE_EQ(lyapunov::exact_conditional_expectation(s, *prob, c, 0.5, 0.5), 0.25);
}

TEST(ExactExpectation, SingleComponentIsDeterministic) {
  const auto prob = problems::custom_quadratic({{1.5, 0.5}});
  const auto cfg = config(0.2, 0.4);
  const auto s = make_state(Vector{1.0, -1.0}, Vector{1.5, -0.5});  // g = grad f(x)
  const LyapunovCoefficients c{0.9, 0.1, CoefficientMode::Linear};
  const double direct = lyapunov::evaluate(stepped(s, *prob, cfg, Outcome{true, 0}), *prob, c, 0.2, 0.4).psi;
  EXPECT_NEAR(lyapunov::exact_conditional_expectation(s, *prob, c, 0.2, 0.4), direct, 1e-15);
}

TEST(ExactExpectation, AgreesWithMonteCarlo) {
  ProblemSpec spec;
  spec.n = 3;
  spec.d = 3;
  spec.L = 1.0;
  spec.tau = 0.8;
  spec.seed = 12;
  const auto prob = problems::interpolated_quadratic(spec);
  const double p = 0.35;
  const double gamma = 0.9 * gamma_max_linear(prob->profile(), p);
  const auto c = coefficients(gamma, p, prob->profile(), CoefficientMode::Linear);
  const auto cfg = config(gamma, p, ExplicitInit{Vector{0.4, -0.2, 1.0}}, 77);
  const PageState s0 = init(*prob, Vector{1.0, 2.0, -0.5}, cfg);
  const double exact = lyapunov::exact_conditional_expectation(s0, *prob, c, gamma, p);

  const int N = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  PageState s = s0;
  for (int k = 0; k < N; ++k) {
    s.x = s0.x;
    s.g = s0.g;
    step(s, *prob, cfg);
    const double v = lyapunov::evaluate(s, *prob, c, gamma, p).psi;
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / N;
  const double se = std::sqrt(std::max(sum2 / N - mean * mean, 0.0) / N);
  EXPECT_LE(std::abs(mean - exact), 4.0 * se + 1e-12) << "mean=" << mean << " exact=" << exact;
}

TEST(ExactExpectation, RefusesLargeN) {
  ProblemSpec spec;
  spec.n = 65;
  spec.d = 2;
  spec.tau = 0.5;
  const auto prob = problems::interpolated_quadratic(spec);
  const auto s = make_state(Vector{1.0, 1.0}, Vector{0.0, 0.0});
  EXPECT_THROW(lyapunov::exact_conditional_expectation(s, *prob, {}, 0.1, 0.5), EnumerationLimitError);
}

TEST(Checks, ReportSlackAndPass) {
  const auto r = lyapunov::make_report(1.0, 0.5, 0.7);
  EXPECT_DOUBLE_EQ(r.slack, 0.2);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(lyapunov::make_report(1.0, 0.7 + 1e-6, 0.7).pass);
  EXPECT_TRUE(lyapunov::make_report(1.0, 0.7 + 1e-13, 0.7).pass);
}

TEST(Checks, HoldOnRandomStates) {
  ProblemSpec spec;
  spec.n = 6;
  spec.d = 4;
  spec.L = 2.0;
  spec.tau = 1.0;
  spec.mu = 0.1;
  spec.seed = 5;
  const auto prob = problems::interpolated_quadratic(spec);
  CounterRng rng(8);
  for (double p : {0.1, 0.6, 1.0}) {
    const double gl = 0.9 * gamma_max_linear(prob->profile(), p);
    const double gs = 0.9 * gamma_max_sublinear(prob->profile(), p);
    const auto cl = coefficients(gl, p, prob->profile(), CoefficientMode::Linear);
    const auto cs = coefficients(gs, p, prob->profile(), CoefficientMode::Sublinear);
    for (int k = 0; k < 50; ++k) {
      Vector x(4), g(4);
      for (std::size_t j = 0; j < 4; ++j) {
        x[j] = rng.normal();
        g[j] = rng.normal();
      }
      const auto s = make_state(x, g);
      EXPECT_TRUE(lyapunov::check_linear_contraction(s, *prob, cl, gl, p).pass);
      EXPECT_TRUE(lyapunov::check_sublinear_descent(s, *prob, cs, gs, p).pass);
    }
    EXPECT_THROW(lyapunov::check_linear_contraction(make_state(Vector(4), Vector(4)), *prob, cs, gs, p),
                 ValidationError);
  }
}

TEST(Rollout, HorizonZeroIsInitialPsi) {
  const auto prob = problems::custom_quadratic({{2.0}, {0.0}});
  const auto cfg = config(0.5, 0.5, ExplicitInit{Vector{1.0}});
  const LyapunovCoefficients c{1.0, 0.0, CoefficientMode::Linear};
  const auto e = lyapunov::exact_expectation_rollout(*prob, Vector{1.0}, cfg, c, 0);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_DOUBLE_EQ(e[0], 0.5);  // f = 1/2, g equals grad f
}

TEST(Rollout, FirstStepMatchesConditionalExpectation) {
  const auto prob = problems::custom_quadratic({{2.0}, {0.0}});
  const auto cfg = config(0.5, 0.5, ExplicitInit{Vector{1.0}});
  const LyapunovCoefficients c{1.0, 0.0, CoefficientMode::Linear};
  const auto e = lyapunov::exact_expectation_rollout(*prob, Vector{1.0}, cfg, c, 1);
  EXPECT_DOUBLE_EQ(e[1], 0.25);
}

TEST(Rollout, PEqualsOneIsGradientDescentPath) {
  const std::vector<double> lambda{0.5, 1.0};
  const auto prob = problems::custom_quadratic({lambda});
  const double gamma = 0.5;
  const auto cfg = config(gamma, 1.0);
  const LyapunovCoefficients c{1.0, 0.0, CoefficientMode::Linear};
  const auto e = lyapunov::exact_expectation_rollout(*prob, Vector{1.0, 1.0}, cfg, c, 30);
  for (std::size_t t = 0; t <= 30; ++t) {
    double f = 0.0;
    for (double l : lambda) f += 0.5 * l * std::pow(1.0 - gamma * l, 2.0 * t);
    EXPECT_NEAR(e[t], f, 1e-15);
  }
}

TEST(Rollout, RefusesHugeTrees) {
  const auto prob = problems::custom_quadratic({{1.0}, {1.0}, {1.0}});
  const auto cfg = config(0.5, 0.5);
  EXPECT_THROW(lyapunov::exact_expectation_rollout(*prob, Vector{1.0}, cfg, {}, 10), EnumerationLimitError);
  EXPECT_NO_THROW(lyapunov::exact_expectation_rollout(*prob, Vector{1.0}, cfg, {}, 9));
}

}  // namespace
}  // namespace page
