#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "page/harness/config.hpp"
#include "page/harness/experiment.hpp"
#include "page/harness/parallel.hpp"
#include "page/schedule.hpp"

namespace page::harness {

enum class CriterionKind { Psi, AvgGradNorm };

struct Criterion {
  CriterionKind kind = CriterionKind::Psi;
  double epsilon_rel = 1e-8;          // epsilon = epsilon_rel * initial mean value
  std::optional<double> epsilon;      // absolute override
};

// A p-axis entry: a number or the symbol "1/n".
using PValue = std::optional<double>;

struct SweepAxes {
  std::vector<double> tau;
  std::vector<PValue> p;
  std::vector<std::size_t> n;
  std::vector<double> kappa;
  std::vector<double> gamma;
  std::vector<std::uint64_t> seed;
};

struct SweepConfig {
  ExperimentConfig base;
  SweepAxes axes;
  Criterion criterion;
  std::string csv;
  std::string svg;
};

inline SweepConfig sweep_from_json(const json& j) {
  check_keys(j, {"base", "axes", "criterion", "output"}, "sweep");
  SweepConfig s;
  if (!j.contains("base")) throw ValidationError("sweep: missing key 'base'");
  s.base = experiment_from_json(j.at("base"));
  if (j.contains("axes")) {
    const auto& a = j.at("axes");
    check_keys(a, {"tau", "p", "n", "kappa", "gamma", "seed"}, "sweep.axes");
    s.axes.tau = get_or<std::vector<double>>(a, "tau", {}, "sweep.axes");
    if (a.contains("p")) {
      if (!a.at("p").is_array()) throw ValidationError("sweep.axes.p must be an array");
      for (const auto& v : a.at("p")) {
        if (v.is_number()) s.axes.p.emplace_back(v.get<double>());
        else if (v == "1/n") s.axes.p.emplace_back(std::nullopt);
        else throw ValidationError("sweep.axes.p entries must be numbers or \"1/n\"");
      }
    }
    s.axes.n = get_or<std::vector<std::size_t>>(a, "n", {}, "sweep.axes");
    s.axes.kappa = get_or<std::vector<double>>(a, "kappa", {}, "sweep.axes");
    s.axes.gamma = get_or<std::vector<double>>(a, "gamma", {}, "sweep.axes");
    s.axes.seed = get_or<std::vector<std::uint64_t>>(a, "seed", {}, "sweep.axes");
  }
  if (j.contains("criterion")) {
    const auto& c = j.at("criterion");
    check_keys(c, {"kind", "epsilon_rel", "epsilon"}, "sweep.criterion");
    const auto kind = get_or<std::string>(c, "kind", "psi", "sweep.criterion");
    if (kind == "psi") s.criterion.kind = CriterionKind::Psi;
    else if (kind == "avg_grad_norm") s.criterion.kind = CriterionKind::AvgGradNorm;
    else throw ValidationError("sweep.criterion.kind must be \"psi\" or \"avg_grad_norm\"");
    s.criterion.epsilon_rel = get_or<double>(c, "epsilon_rel", 1e-8, "sweep.criterion");
    if (c.contains("epsilon")) s.criterion.epsilon = c.at("epsilon").get<double>();
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"csv", "svg"}, "sweep.output");
    s.csv = get_or<std::string>(o, "csv", "", "sweep.output");
    s.svg = get_or<std::string>(o, "svg", "", "sweep.output");
  }
  return s;
}

/// Which axis values produced a grid point (unset = not swept).
struct GridPoint {
  std::optional<double> tau;
  std::optional<PValue> p;
  std::optional<std::size_t> n;
  std::optional<double> kappa;
  std::optional<double> gamma;
  std::optional<std::uint64_t> seed;
};

/// Cartesian product in axis order tau, p, n, kappa, gamma, seed (last fastest).
inline std::vector<GridPoint> expand_grid(const SweepAxes& axes) {
  std::vector<GridPoint> grid{GridPoint{}};
  auto extend = [&grid](const auto& values, auto setter) {
    if (values.empty()) return;
    std::vector<GridPoint> next;
    next.reserve(grid.size() * values.size());
    for (const auto& g : grid)
      for (const auto& v : values) {
        GridPoint h = g;
        setter(h, v);
        next.push_back(h);
      }
    grid = std::move(next);
  };
  extend(axes.tau, [](GridPoint& g, double v) { g.tau = v; });
  extend(axes.p, [](GridPoint& g, const PValue& v) { g.p = v; });
  extend(axes.n, [](GridPoint& g, std::size_t v) { g.n = v; });
  extend(axes.kappa, [](GridPoint& g, double v) { g.kappa = v; });
  extend(axes.gamma, [](GridPoint& g, double v) { g.gamma = v; });
  extend(axes.seed, [](GridPoint& g, std::uint64_t v) { g.seed = v; });
  return grid;
}

inline ExperimentConfig apply_point(ExperimentConfig c, const GridPoint& g) {
  auto& spec = c.problem.spec;
  const bool touches_problem = g.tau || g.n || g.kappa;
  if (g.tau) spec.tau = *g.tau;
  if (g.n) spec.n = *g.n;
  if (g.kappa) {
    if (!(*g.kappa >= 1.0)) throw ValidationError("kappa must be >= 1");
    spec.mu = spec.L / *g.kappa;
  }
  if (touches_problem) c.problem.pinned.reset();
  if (g.p) c.algorithm.p = *g.p;
  if (g.gamma) {
    c.algorithm.stepsize = StepsizeKind::Explicit;
    c.algorithm.gamma = *g.gamma;
  }
  if (g.seed) c.algorithm.seed = *g.seed;
  return c;
}

/// Replicate-averaged series of one experiment, summed block by block in a
/// fixed order so results do not depend on the worker count.
struct SeriesMeans {
  std::vector<double> psi;
  std::vector<double> avg_grad_norm;  // running (1/(t+1)) sum |grad f|^2
  std::vector<double> grad_calls;
  std::optional<std::string> error;
};

inline constexpr std::size_t kSeriesBlocks = 16;

struct BlockSums {
  std::vector<double> psi, avg_grad, calls;
  std::optional<std::string> error;
};

inline BlockSums run_block(const ResolvedExperiment& e, std::size_t first, std::size_t last) {
  BlockSums b;
  const std::size_t len = static_cast<std::size_t>(e.horizon) + 1;
  b.psi.assign(len, 0.0);
  b.avg_grad.assign(len, 0.0);
  b.calls.assign(len, 0.0);
  RunOptions opts;
  opts.psi_coefficients = e.coefficients;
  for (std::size_t r = first; r < last && !b.error; ++r) {
    PageConfig cfg = e.page;
    cfg.seed = replicate_seed(e.page.seed, r);
    double grad_sum = 0.0;
    try {
      run(*e.problem, e.x0, cfg, e.horizon, opts, [&](const TrajectoryRecord& rec) {
        const auto t = static_cast<std::size_t>(rec.t);
        grad_sum += rec.grad_norm_sq;
        b.psi[t] += rec.psi;
        b.avg_grad[t] += grad_sum / static_cast<double>(t + 1);
        b.calls[t] += static_cast<double>(rec.grad_calls);
      });
    } catch (const DivergenceError& err) {
      b.error = "replicate " + std::to_string(r) + ": " + err.what();
    }
  }
  return b;
}

/// Runs several experiments (stride forced to 1) and returns their means.
inline std::vector<SeriesMeans> run_series(const std::vector<const ResolvedExperiment*>& exps) {
  struct Task {
    std::size_t exp, first, last;
  };
  std::vector<Task> tasks;
  std::vector<std::size_t> first_task(exps.size());
  for (std::size_t k = 0; k < exps.size(); ++k) {
    first_task[k] = tasks.size();
    const std::size_t R = exps[k]->repetitions;
    const std::size_t blocks = std::min<std::size_t>(R, kSeriesBlocks);
    for (std::size_t b = 0; b < blocks; ++b) tasks.push_back({k, R * b / blocks, R * (b + 1) / blocks});
  }
  std::vector<BlockSums> sums(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t k) {
    sums[k] = run_block(*exps[tasks[k].exp], tasks[k].first, tasks[k].last);
  });
  std::vector<SeriesMeans> out(exps.size());
  for (std::size_t k = 0; k < exps.size(); ++k) {
    auto& m = out[k];
    const std::size_t end = k + 1 < exps.size() ? first_task[k + 1] : tasks.size();
    for (std::size_t t = first_task[k]; t < end; ++t) {
      const auto& b = sums[t];
      if (b.error && !m.error) m.error = b.error;
      if (m.psi.empty()) {
        m.psi = b.psi;
        m.avg_grad_norm = b.avg_grad;
        m.grad_calls = b.calls;
      } else {
        for (std::size_t i = 0; i < m.psi.size(); ++i) {
          m.psi[i] += b.psi[i];
          m.avg_grad_norm[i] += b.avg_grad[i];
          m.grad_calls[i] += b.calls[i];
        }
      }
    }
    const double R = static_cast<double>(exps[k]->repetitions);
    for (std::size_t i = 0; i < m.psi.size(); ++i) {
      m.psi[i] /= R;
      m.avg_grad_norm[i] /= R;
      m.grad_calls[i] /= R;
    }
  }
  return out;
}

inline SeriesMeans run_series(const ResolvedExperiment& e) { return run_series({&e}).front(); }

struct Crossing {
  std::optional<std::uint64_t> iterations;  // empty = censored at the horizon
  double grad_calls = std::numeric_limits<double>::quiet_NaN();
  double initial_value = 0.0;
  double epsilon = 0.0;
};

inline Crossing first_crossing(const SeriesMeans& m, const Criterion& c) {
  const auto& series = c.kind == CriterionKind::Psi ? m.psi : m.avg_grad_norm;
  Crossing out;
  out.initial_value = series.front();
  out.epsilon = c.epsilon.value_or(c.epsilon_rel * out.initial_value);
  for (std::size_t t = 0; t < series.size(); ++t)
    if (series[t] <= out.epsilon) {
      out.iterations = t;
      out.grad_calls = m.grad_calls[t];
      break;
    }
  return out;
}

struct PointResult {
  GridPoint point;
  std::string status = "ok";
  double tau = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  Crossing crossing;
  double predicted_rho = std::numeric_limits<double>::quiet_NaN();
  double predicted_iterations = std::numeric_limits<double>::quiet_NaN();
  double predicted_grad_calls = std::numeric_limits<double>::quiet_NaN();
};

inline void fill_predictions(PointResult& pr, const ResolvedExperiment& e, const Criterion& c) {
  const auto& prof = e.problem->profile();
  const double gmax = gamma_max_linear(prof, e.page.p);
  pr.eta = e.page.gamma / gmax;
  const double eps = pr.crossing.epsilon;
  const double init = pr.crossing.initial_value;
  if (c.kind == CriterionKind::Psi && prof.mu && e.coefficients.mode == CoefficientMode::Linear) {
    pr.predicted_rho = contraction_factor(e.page.gamma, e.page.p, e.coefficients, prof).rho;
    if (pr.eta < 1.0 && eps > 0.0) {
      const double log_factor = std::log(std::max(init / eps, 1.0));
      pr.predicted_iterations = iteration_complexity_linear(prof, e.page.p, pr.eta) * log_factor;
      pr.predicted_grad_calls = gradient_complexity_linear(prof, e.page.p, e.problem->n(), pr.eta) * log_factor;
    }
  } else if (c.kind == CriterionKind::AvgGradNorm && e.coefficients.mode == CoefficientMode::Sublinear &&
             eps > 0.0) {
    // psi^0 is known exactly only for deterministic g^0; use the recorded mean.
    const double denom = e.page.gamma - e.page.gamma * e.page.gamma * (prof.L - prof.tau);
    pr.predicted_iterations = 2.0 * pr.crossing.initial_value / (eps * denom) - 1.0;
    pr.predicted_grad_calls =
        pr.predicted_iterations * expected_grad_calls_per_iter(e.page.p, e.problem->n());
  }
}

struct SweepResult {
  std::vector<PointResult> points;
};

inline SweepResult run_sweep(const SweepConfig& sc) {
  const auto grid = expand_grid(sc.axes);
  SweepResult out;
  out.points.resize(grid.size());
  std::vector<std::optional<ResolvedExperiment>> resolved(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto& pr = out.points[k];
    pr.point = grid[k];
    try {
      resolved[k] = resolve(apply_point(sc.base, grid[k]));
    } catch (const std::exception& e) {
      pr.status = std::string("invalid: ") + e.what();
      continue;
    }
    const auto& e = *resolved[k];
    const auto& prof = e.problem->profile();
    pr.tau = prof.tau;
    pr.p = e.page.p;
    pr.n = e.problem->n();
    pr.kappa = prof.mu ? prof.L / *prof.mu : std::numeric_limits<double>::quiet_NaN();
    pr.gamma = e.page.gamma;
    pr.seed = e.page.seed;
  }
  std::vector<const ResolvedExperiment*> valid;
  std::vector<std::size_t> index;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (resolved[k]) {
      valid.push_back(&*resolved[k]);
      index.push_back(k);
    }
  const auto means = run_series(valid);
  for (std::size_t v = 0; v < valid.size(); ++v) {
    auto& pr = out.points[index[v]];
    if (means[v].error) {
      pr.status = "diverged: " + *means[v].error;
      continue;
    }
    pr.crossing = first_crossing(means[v], sc.criterion);
    if (!pr.crossing.iterations) pr.status = "censored";
    fill_predictions(pr, *valid[v], sc.criterion);
  }
  return out;
}

inline constexpr const char* kSweepHeader =
    "point,tau,p,n,kappa,gamma,seed,status,iterations,grad_calls,initial_value,epsilon,eta,"
    "predicted_rho,predicted_iterations,predicted_grad_calls";

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
  return q + "\"";
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  os << kSweepHeader << '\n';
  for (std::size_t k = 0; k < res.points.size(); ++k) {
    const auto& p = res.points[k];
    const auto& c = p.crossing;
    os << k << ',' << format_double(p.tau) << ',' << format_double(p.p) << ',' << p.n << ','
       << format_double(p.kappa) << ',' << format_double(p.gamma) << ',' << p.seed << ',' << csv_field(p.status)
       << ',' << (c.iterations ? std::to_string(*c.iterations) : std::string()) << ','
       << format_double(c.grad_calls) << ',' << format_double(c.initial_value) << ',' << format_double(c.epsilon)
       << ',' << format_double(p.eta) << ',' << format_double(p.predicted_rho) << ','
       << format_double(p.predicted_iterations) << ',' << format_double(p.predicted_grad_calls) << '\n';
  }
}

}  // namespace page::harness
