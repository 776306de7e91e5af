#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "page/core.hpp"
#include "page/errors.hpp"
#include "page/estimator.hpp"
#include "page/problems.hpp"
#include "page/schedule.hpp"

namespace page::harness {

using json = nlohmann::json;

/// Config and sweep documents are JSON; every object is checked against the
/// keys it may contain and anything else is rejected.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return get_or<T>(j, key, T{}, where);
}

// ---------------------------------------------------------------------------
// Problem documents

inline json profile_to_json(const SmoothnessProfile& p) {
  json j{{"L", p.L}, {"tau", p.tau}};
  if (p.mu) j["mu"] = *p.mu;
  if (p.f_star) j["f_star"] = *p.f_star;
  return j;
}

/// Self-describing problem document: generator inputs plus certified constants.
inline json problem_to_json(const ProblemSpec& spec, const SmoothnessProfile& certified) {
  json j{{"family", to_string(spec.family)}, {"n", spec.n}, {"d", spec.d}, {"L", spec.L},
         {"tau", spec.tau}, {"seed", spec.seed}};
  if (spec.mu) j["mu"] = *spec.mu;
  if (spec.family == ProblemFamily::CustomQuadratic) j["curvatures"] = spec.curvatures;
  j["certified"] = profile_to_json(certified);
  return j;
}

struct ProblemDocument {
  ProblemSpec spec;
  std::optional<SmoothnessProfile> pinned;
};

inline ProblemDocument problem_from_json(const json& j) {
  const std::string where = "problem";
  check_keys(j, {"family", "n", "d", "L", "tau", "mu", "seed", "curvatures", "certified"}, where);
  ProblemDocument doc;
  auto& s = doc.spec;
  s.family = family_from_string(get_required<std::string>(j, "family", where));
  s.n = get_or<std::size_t>(j, "n", 1, where);
  s.d = get_or<std::size_t>(j, "d", 1, where);
  s.L = get_or<double>(j, "L", 1.0, where);
  s.tau = get_or<double>(j, "tau", 0.0, where);
  if (j.contains("mu")) s.mu = get_required<double>(j, "mu", where);
  s.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  if (j.contains("curvatures")) {
    if (s.family != ProblemFamily::CustomQuadratic)
      throw ValidationError("problem.curvatures is only valid for custom_quadratic");
    s.curvatures = get_required<std::vector<std::vector<double>>>(j, "curvatures", where);
  } else if (s.family == ProblemFamily::CustomQuadratic) {
    throw ValidationError("custom_quadratic requires problem.curvatures");
  }
  if (j.contains("certified")) {
    const auto& c = j.at("certified");
    check_keys(c, {"L", "tau", "mu", "f_star"}, "problem.certified");
    SmoothnessProfile p;
    p.L = get_required<double>(c, "L", "problem.certified");
    p.tau = get_required<double>(c, "tau", "problem.certified");
    if (c.contains("mu")) p.mu = c.at("mu").get<double>();
    if (c.contains("f_star")) p.f_star = c.at("f_star").get<double>();
    doc.pinned = p;
  }
  return doc;
}

namespace detail {
inline bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }
inline bool close(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || close(*a, *b));
}
}  // namespace detail

/// Regenerates the instance; if constants were pinned they must match.
inline std::unique_ptr<FiniteSumProblem> instantiate(const ProblemDocument& doc) {
  auto prob = problems::make_problem(doc.spec);
  if (doc.pinned) {
    const auto& got = prob->profile();
    const auto& want = *doc.pinned;
    if (!detail::close(got.L, want.L) || !detail::close(got.tau, want.tau) ||
        !detail::close(got.mu, want.mu) || !detail::close(got.f_star, want.f_star))
      throw ValidationError("problem.certified does not match the regenerated instance: got " +
                            profile_to_json(got).dump() + ", pinned " + profile_to_json(want).dump());
  }
  return prob;
}

// ---------------------------------------------------------------------------
// Experiment documents

enum class StepsizeKind { Explicit, EtaTimesMaxLinear, EtaTimesMaxSublinear };

struct AlgorithmSpec {
  StepsizeKind stepsize = StepsizeKind::EtaTimesMaxLinear;
  double gamma = 0.0;  // Explicit only
  double eta = 0.9;
  std::optional<double> p;  // empty = 1/n
  enum class G0 { FullGradient, Zero, Explicit } g0 = G0::FullGradient;
  std::vector<double> g0_values;
  std::uint64_t seed = 0;
};

struct OutputSpec {
  std::string csv;
  std::string summary;
};

struct ExperimentConfig {
  ProblemDocument problem;
  AlgorithmSpec algorithm;
  std::optional<CoefficientMode> lyapunov;
  std::vector<double> x0;  // empty = all ones; one entry = fill
  std::uint64_t horizon = 100;
  std::uint64_t repetitions = 1;
  std::optional<std::uint64_t> record_stride;
  OutputSpec output;
};

inline AlgorithmSpec algorithm_from_json(const json& j) {
  const std::string where = "algorithm";
  check_keys(j, {"stepsize", "eta", "p", "g0", "seed"}, where);
  AlgorithmSpec a;
  if (j.contains("stepsize")) {
    const auto& s = j.at("stepsize");
    if (s.is_number()) {
      a.stepsize = StepsizeKind::Explicit;
      a.gamma = s.get<double>();
    } else if (s == "eta_times_max_linear") {
      a.stepsize = StepsizeKind::EtaTimesMaxLinear;
    } else if (s == "eta_times_max_sublinear") {
      a.stepsize = StepsizeKind::EtaTimesMaxSublinear;
    } else {
      throw ValidationError("algorithm.stepsize must be a number, \"eta_times_max_linear\" or "
                            "\"eta_times_max_sublinear\"");
    }
  }
  a.eta = get_or<double>(j, "eta", 0.9, where);
  if (j.contains("p")) {
    const auto& p = j.at("p");
    if (p.is_number()) a.p = p.get<double>();
    else if (p != "1/n") throw ValidationError("algorithm.p must be a number or \"1/n\"");
  } else {
    a.p = 1.0;
  }
  if (j.contains("g0")) {
    const auto& g = j.at("g0");
    if (g == "full_gradient") a.g0 = AlgorithmSpec::G0::FullGradient;
    else if (g == "zero") a.g0 = AlgorithmSpec::G0::Zero;
    else if (g.is_array()) {
      a.g0 = AlgorithmSpec::G0::Explicit;
      a.g0_values = g.get<std::vector<double>>();
    } else {
      throw ValidationError("algorithm.g0 must be \"full_gradient\", \"zero\" or an array");
    }
  }
  a.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  return a;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  const std::string where = "config";
  check_keys(j, {"problem", "algorithm", "lyapunov", "x0", "horizon", "repetitions", "record_stride", "output"},
             where);
  ExperimentConfig c;
  if (!j.contains("problem")) throw ValidationError("config: missing key 'problem'");
  c.problem = problem_from_json(j.at("problem"));
  if (j.contains("algorithm")) c.algorithm = algorithm_from_json(j.at("algorithm"));
  if (j.contains("lyapunov")) {
    const auto m = get_required<std::string>(j, "lyapunov", where);
    if (m == "linear") c.lyapunov = CoefficientMode::Linear;
    else if (m == "sublinear") c.lyapunov = CoefficientMode::Sublinear;
    else throw ValidationError("config.lyapunov must be \"linear\" or \"sublinear\"");
  }
  if (j.contains("x0")) {
    const auto& x = j.at("x0");
    if (x.is_number()) c.x0 = {x.get<double>()};
    else if (x.is_array()) c.x0 = x.get<std::vector<double>>();
    else throw ValidationError("config.x0 must be a number or an array");
  }
  c.horizon = get_or<std::uint64_t>(j, "horizon", 100, where);
  c.repetitions = get_or<std::uint64_t>(j, "repetitions", 1, where);
  if (j.contains("record_stride")) c.record_stride = get_required<std::uint64_t>(j, "record_stride", where);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"csv", "summary"}, "config.output");
    c.output.csv = get_or<std::string>(o, "csv", "", "config.output");
    c.output.summary = get_or<std::string>(o, "summary", "", "config.output");
  }
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

/// A config with every symbolic choice replaced by numbers and validated.
struct ResolvedExperiment {
  std::shared_ptr<const FiniteSumProblem> problem;
  PageConfig page;
  LyapunovCoefficients coefficients;
  Vector x0;
  double eta = 0.9;
  std::uint64_t horizon = 0;
  std::uint64_t repetitions = 1;
  std::uint64_t stride = 1;
};

inline std::uint64_t default_stride(std::uint64_t horizon) { return horizon <= 10'000 ? 1 : 10; }

inline ResolvedExperiment resolve(const ExperimentConfig& c) {
  ResolvedExperiment r;
  r.problem = instantiate(c.problem);
  const auto& prof = r.problem->profile();
  const std::size_t n = r.problem->n();
  const std::size_t d = r.problem->d();

  r.page.p = c.algorithm.p.value_or(1.0 / static_cast<double>(n));
  if (!(r.page.p > 0.0) || !(r.page.p <= 1.0)) throw ValidationError("require 0 < p <= 1");
  const CoefficientMode mode = c.lyapunov.value_or(prof.mu ? CoefficientMode::Linear : CoefficientMode::Sublinear);
  r.eta = c.algorithm.eta;
  switch (c.algorithm.stepsize) {
    case StepsizeKind::Explicit: r.page.gamma = c.algorithm.gamma; break;
    case StepsizeKind::EtaTimesMaxLinear:
    case StepsizeKind::EtaTimesMaxSublinear: {
      if (!(r.eta > 0.0) || !(r.eta < 1.0)) throw ValidationError("require 0 < eta < 1");
      r.page.gamma = r.eta * (c.algorithm.stepsize == StepsizeKind::EtaTimesMaxLinear
                                  ? gamma_max_linear(prof, r.page.p)
                                  : gamma_max_sublinear(prof, r.page.p));
      break;
    }
  }
  if (!prof.f_star) throw ValidationError("problem has no f_star; the Lyapunov function is undefined");
  if (mode == CoefficientMode::Linear && !prof.mu)
    throw ValidationError("linear Lyapunov coefficients need a PL constant mu");
  r.coefficients = coefficients(r.page.gamma, r.page.p, prof, mode);

  switch (c.algorithm.g0) {
    case AlgorithmSpec::G0::FullGradient: r.page.g0_mode = FullGradientInit{}; break;
    case AlgorithmSpec::G0::Zero: r.page.g0_mode = ZeroInit{}; break;
    case AlgorithmSpec::G0::Explicit: r.page.g0_mode = ExplicitInit{Vector(c.algorithm.g0_values)}; break;
  }
  r.page.seed = c.algorithm.seed;
  r.page.validate(d);

  if (c.x0.empty()) r.x0 = Vector(d, 1.0);
  else if (c.x0.size() == 1) r.x0 = Vector(d, c.x0.front());
  else r.x0 = Vector(c.x0);
  if (r.x0.size() != d) throw DimensionError(d, r.x0.size());
  if (!r.x0.all_finite()) throw ValidationError("x0 must be finite");

  r.horizon = c.horizon;
  if (c.repetitions == 0) throw ValidationError("repetitions must be >= 1");
  r.repetitions = c.repetitions;
  r.stride = c.record_stride.value_or(default_stride(c.horizon));
  if (r.stride == 0) throw ValidationError("record_stride must be >= 1");
  return r;
}

}  // namespace page::harness
