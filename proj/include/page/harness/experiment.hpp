#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "page/analysis.hpp"
#include "page/estimator.hpp"
#include "page/harness/config.hpp"
#include "page/harness/parallel.hpp"
#include "page/schedule.hpp"

namespace page::harness {

inline constexpr const char* kTrajectoryHeader = "t,replicate,f_gap,grad_norm_sq,g_norm_sq,psi,grad_calls";

/// Shortest round-trip representation; identical bytes for identical doubles.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate) { return base + replicate; }

struct ReplicateResult {
  std::vector<TrajectoryRecord> records;
  std::optional<std::string> error;
  std::uint64_t error_t = 0;
  std::uint64_t error_calls = 0;
};

/// One seeded trajectory; divergence is captured, not thrown.
inline ReplicateResult run_replicate(const ResolvedExperiment& e, std::uint64_t replicate) {
  PageConfig cfg = e.page;
  cfg.seed = replicate_seed(e.page.seed, replicate);
  RunOptions opts;
  opts.stride = e.stride;
  opts.psi_coefficients = e.coefficients;
  ReplicateResult out;
  try {
    run(*e.problem, e.x0, cfg, e.horizon, opts,
        [&](const TrajectoryRecord& r) { out.records.push_back(r); });
  } catch (const DivergenceError& err) {
    out.error = err.what();
    out.error_t = err.iteration();
    out.error_calls = out.records.empty() ? 0 : out.records.back().grad_calls;
  }
  return out;
}

struct Summary {
  double final_mean_psi = std::numeric_limits<double>::quiet_NaN();
  double fitted_rho = std::numeric_limits<double>::quiet_NaN();
  double theoretical_rho = std::numeric_limits<double>::quiet_NaN();
  double mean_grad_calls = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t replicates = 0;
  std::uint64_t failures = 0;
};

struct ExperimentResult {
  std::vector<ReplicateResult> replicates;
  std::vector<double> times;      // record times shared by all replicates
  std::vector<double> mean_psi;   // over successful replicates
  Summary summary;
};

/// Mean over successful replicates of a per-record quantity.
template <typename Field>
std::vector<double> replicate_mean(const std::vector<ReplicateResult>& reps, Field field) {
  std::vector<double> mean;
  std::size_t count = 0;
  for (const auto& r : reps) {
    if (r.error) continue;
    if (mean.empty()) mean.assign(r.records.size(), 0.0);
    for (std::size_t k = 0; k < r.records.size(); ++k) mean[k] += field(r.records[k]);
    ++count;
  }
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

inline ExperimentResult run_experiment(const ResolvedExperiment& e) {
  ExperimentResult res;
  res.replicates.resize(e.repetitions);
  parallel_for(e.repetitions, [&](std::size_t r) { res.replicates[r] = run_replicate(e, r); });

  auto& s = res.summary;
  s.replicates = e.repetitions;
  for (const auto& r : res.replicates) s.failures += r.error ? 1 : 0;
  if (s.failures < s.replicates) {
    for (const auto& r : res.replicates)
      if (!r.error) {
        for (const auto& rec : r.records) res.times.push_back(static_cast<double>(rec.t));
        break;
      }
    res.mean_psi = replicate_mean(res.replicates, [](const TrajectoryRecord& r) { return r.psi; });
    const auto calls =
        replicate_mean(res.replicates, [](const TrajectoryRecord& r) { return static_cast<double>(r.grad_calls); });
    s.final_mean_psi = res.mean_psi.back();
    s.mean_grad_calls = calls.back();
    try {
      s.fitted_rho = analysis::fit_linear_rate(res.times, res.mean_psi);
    } catch (const ValidationError&) {
    }
  }
  const auto& prof = e.problem->profile();
  if (e.coefficients.mode == CoefficientMode::Linear && prof.mu)
    s.theoretical_rho = contraction_factor(e.page.gamma, e.page.p, e.coefficients, prof).rho;
  return res;
}

inline void write_trajectory_csv(std::ostream& os, const ExperimentResult& res) {
  os << kTrajectoryHeader << '\n';
  for (std::size_t r = 0; r < res.replicates.size(); ++r) {
    const auto& rep = res.replicates[r];
    for (const auto& rec : rep.records)
      os << rec.t << ',' << r << ',' << format_double(rec.f_gap) << ',' << format_double(rec.grad_norm_sq) << ','
         << format_double(rec.g_norm_sq) << ',' << format_double(rec.psi) << ',' << rec.grad_calls << '\n';
    if (rep.error) os << rep.error_t << ',' << r << ",diverged,,,," << rep.error_calls << '\n';
  }
}

inline std::string summary_line(const Summary& s) {
  return "final_mean_psi=" + format_double(s.final_mean_psi) + " fitted_rho=" + format_double(s.fitted_rho) +
         " theoretical_rho=" + format_double(s.theoretical_rho) +
         " mean_grad_calls=" + format_double(s.mean_grad_calls) + " replicates=" + std::to_string(s.replicates) +
         " failures=" + std::to_string(s.failures);
}

inline json summary_json(const Summary& s, const ResolvedExperiment& e, const ProblemSpec& spec) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"final_mean_psi", num(s.final_mean_psi)},
              {"fitted_rho", num(s.fitted_rho)},
              {"theoretical_rho", num(s.theoretical_rho)},
              {"mean_grad_calls", num(s.mean_grad_calls)},
              {"replicates", s.replicates},
              {"failures", s.failures},
              {"gamma", e.page.gamma},
              {"p", e.page.p},
              {"a", e.coefficients.a},
              {"b", e.coefficients.b},
              {"lyapunov", to_string(e.coefficients.mode)},
              {"problem", problem_to_json(spec, e.problem->profile())}};
}

}  // namespace page::harness
