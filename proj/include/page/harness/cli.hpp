#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "page/analysis.hpp"
#include "page/harness/config.hpp"
#include "page/harness/experiment.hpp"
#include "page/harness/suites.hpp"
#include "page/harness/svg.hpp"
#include "page/harness/sweep.hpp"

namespace page::harness {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kVerification = 3 };

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  return f;
}

}  // namespace detail

/// page-lab run <config>
inline int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  ResolvedExperiment exp;
  try {
    cfg = experiment_from_json(read_json_file(config_path));
    exp = resolve(cfg);
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  ExperimentResult res;
  try {
    res = run_experiment(exp);
    if (cfg.output.csv.empty()) {
      write_trajectory_csv(out, res);
    } else {
      auto f = detail::open_output(cfg.output.csv);
      write_trajectory_csv(f, res);
    }
    if (!cfg.output.summary.empty()) {
      auto f = detail::open_output(cfg.output.summary);
      f << summary_json(res.summary, exp, cfg.problem.spec).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  (cfg.output.csv.empty() ? err : out) << "summary " << summary_line(res.summary) << '\n';
  for (std::size_t r = 0; r < res.replicates.size(); ++r)
    if (res.replicates[r].error) err << "replicate " << r << ": " << *res.replicates[r].error << '\n';
  return res.summary.failures ? kRuntime : kOk;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lemmas", "contraction", "descent", "rollout", "certify"};
  return names;
}

inline std::vector<SuiteResult> run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "lemmas") return {weak_convexity_suite(seed), cocoercivity_suite(seed)};
  if (name == "contraction") return {contraction_suite(seed)};
  if (name == "descent") return {descent_suite(seed)};
  if (name == "rollout") return {rollout_suite(seed)};
  if (name == "certify") return {certify_suite(seed)};
  throw ValidationError("unknown suite '" + name + "'");
}

/// page-lab verify <suite> [--seed N]
inline int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  std::vector<SuiteResult> results;
  try {
    results = run_suite(suite, seed);
  } catch (const ValidationError& e) {
    err << e.what() << "; expected one of: lemmas, contraction, descent, rollout, certify\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  bool ok = true;
  for (const auto& r : results) {
    out << r.report() << '\n';
    ok = ok && r.pass();
  }
  return ok ? kOk : kVerification;
}

/// page-lab sweep <config>
inline int cmd_sweep(const std::string& config_path, std::ostream& out, std::ostream& err) {
  SweepConfig sc;
  try {
    sc = sweep_from_json(read_json_file(config_path));
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kValidation;
  }
  SweepResult res;
  try {
    res = run_sweep(sc);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  std::size_t valid = 0;
  for (const auto& p : res.points) {
    if (p.status.rfind("invalid", 0) == 0) err << "skipped grid point: " << p.status << '\n';
    else ++valid;
  }
  try {
    if (sc.csv.empty()) {
      write_sweep_csv(out, res);
    } else {
      auto f = detail::open_output(sc.csv);
      write_sweep_csv(f, res);
    }
    if (!sc.svg.empty()) {
      auto f = detail::open_output(sc.svg);
      write_sweep_svg(f, res);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  if (valid == 0) {
    err << "no valid grid points\n";
    return kValidation;
  }
  return kOk;
}

/// Mean psi per t over the non-diverged replicates of a trajectory CSV.
inline void mean_psi_from_csv(std::istream& in, std::vector<double>& times, std::vector<double>& mean_psi) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader)
    throw ValidationError("not a trajectory CSV (header mismatch)");
  std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    while (fields.size() < 7) fields.emplace_back();
    if (fields[2] == "diverged") continue;
    try {
      const auto t = std::stoull(fields[0]);
      const double psi = std::stod(fields[5]);
      if (std::isfinite(psi)) {
        auto& a = acc[t];
        a.first += psi;
        ++a.second;
      }
    } catch (const std::exception&) {
      throw ValidationError("malformed CSV row " + std::to_string(row));
    }
  }
  for (const auto& [t, a] : acc) {
    times.push_back(static_cast<double>(t));
    mean_psi.push_back(a.first / static_cast<double>(a.second));
  }
}

/// page-lab rate <csv>
inline int cmd_rate(const std::string& csv_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(csv_path);
  if (!in) {
    err << "cannot open '" << csv_path << "'\n";
    return kValidation;
  }
  try {
    std::vector<double> times, mean;
    mean_psi_from_csv(in, times, mean);
    const double rho = analysis::fit_linear_rate(times, mean);
    out << "fitted_rho=" << format_double(rho) << " points=" << times.size() << '\n';
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace page::harness
