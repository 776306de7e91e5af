#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "page/harness/cli.hpp"

namespace page::harness {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("page_lab_test_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const json& j) const {
    std::ofstream(file(name)) << j.dump(2);
    return file(name);
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json quadratic_config() {
  return json{{"problem", {{"family", "interpolated_quadratic"}, {"n", 6}, {"d", 4}, {"L", 1.0},
                           {"tau", 0.5}, {"mu", 0.1}, {"seed", 3}}},
              {"algorithm", {{"stepsize", "eta_times_max_linear"}, {"eta", 0.9}, {"p", "1/n"}, {"seed", 10}}},
              {"horizon", 300},
              {"repetitions", 5}};
}

TEST(Config, RejectsUnknownKeys) {
  auto j = quadratic_config();
  j["horizn"] = 10;
  EXPECT_THROW(experiment_from_json(j), ValidationError);
  j = quadratic_config();
  j["problem"]["Lmax"] = 2.0;
  EXPECT_THROW(experiment_from_json(j), ValidationError);
  j = quadratic_config();
  j["algorithm"]["gama"] = 0.1;
  EXPECT_THROW(experiment_from_json(j), ValidationError);
  EXPECT_THROW(experiment_from_json(json{{"horizon", 3}}), ValidationError);
}

TEST(Config, DefaultsAndSymbols) {
  const auto c = experiment_from_json(quadratic_config());
  const auto r = resolve(c);
  EXPECT_DOUBLE_EQ(r.page.p, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.page.gamma, 0.9 * gamma_max_linear(r.problem->profile(), 1.0 / 6.0));
  EXPECT_EQ(r.coefficients.mode, CoefficientMode::Linear);
  EXPECT_EQ(r.x0, Vector(4, 1.0));
  EXPECT_EQ(r.stride, 1u);
  EXPECT_EQ(default_stride(10'001), 10u);
}

TEST(Config, LogisticDefaultsToSublinear) {
  const json j{{"problem", {{"family", "logistic"}, {"n", 10}, {"d", 3}, {"seed", 1}}},
               {"algorithm", {{"stepsize", "eta_times_max_sublinear"}}}};
  const auto r = resolve(experiment_from_json(j));
  EXPECT_EQ(r.coefficients.mode, CoefficientMode::Sublinear);
  auto bad = j;
  bad["lyapunov"] = "linear";
  EXPECT_THROW(resolve(experiment_from_json(bad)), ValidationError);
}

TEST(Config, ProblemDocumentRoundTrip) {
  ProblemSpec spec;
  spec.n = 5;
  spec.d = 3;
  spec.tau = 0.25;
  spec.seed = 8;
  const auto prob = problems::make_problem(spec);
  json doc = problem_to_json(spec, prob->profile());
  EXPECT_NO_THROW(instantiate(problem_from_json(doc)));
  doc["certified"]["L"] = 1.5;
  EXPECT_THROW(instantiate(problem_from_json(doc)), ValidationError);
}

TEST(CliRun, StepsizeAtOneOverLIsAValidationError) {
  TempDir dir;
  const json j{{"problem", {{"family", "half_square"}}}, {"algorithm", {{"stepsize", 1.0}}}, {"horizon", 5}};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(dir.write("cfg.json", j), out, err), kValidation);
  EXPECT_NE(err.str().find("1/L"), std::string::npos) << err.str();
}

TEST(CliRun, MissingFileIsAValidationError) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run("/nonexistent/cfg.json", out, err), kValidation);
}

TEST(CliRun, HalfSquareGradientDescentPsi) {
  // p = 1, g^0 = grad f: psi^t = f(x^t) = (1/2) 4^{-t} from x^0 = (1, 1) with gamma = 1/2.
  TempDir dir;
  const json j{{"problem", {{"family", "half_square"}}},
               {"algorithm", {{"stepsize", 0.5}, {"p", 1.0}}},
               {"horizon", 12},
               {"output", {{"csv", dir.file("traj.csv")}}}};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(dir.write("cfg.json", j), out, err), kOk) << err.str();
  std::ifstream in(dir.file("traj.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,replicate,f_gap,grad_norm_sq,g_norm_sq,psi,grad_calls");
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string s; std::getline(ss, s, ',');) f.push_back(s);
    ASSERT_EQ(f.size(), 7u);
    const int t = std::stoi(f[0]);
    EXPECT_EQ(std::stod(f[5]), 0.5 * std::pow(0.25, t));
    EXPECT_EQ(std::stoull(f[6]), static_cast<unsigned long long>(t + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 13);
  EXPECT_NE(out.str().find("summary final_mean_psi="), std::string::npos);

  std::ostringstream rate_out, rate_err;
  ASSERT_EQ(cmd_rate(dir.file("traj.csv"), rate_out, rate_err), kOk) << rate_err.str();
  const auto pos = rate_out.str().find("fitted_rho=");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(rate_out.str().substr(pos + 11)), 0.25, 1e-12);
}

TEST(CliRun, CsvIsByteIdenticalAcrossRunsAndThreadCounts) {
  TempDir dir;
  auto j = quadratic_config();
  j["output"] = {{"csv", dir.file("a.csv")}};
  const auto cfg_a = dir.write("a.json", j);
  j["output"] = {{"csv", dir.file("b.csv")}};
  const auto cfg_b = dir.write("b.json", j);
  std::ostringstream out, err;
  ::setenv("PAGE_LAB_THREADS", "1", 1);
  ASSERT_EQ(cmd_run(cfg_a, out, err), kOk) << err.str();
  ::setenv("PAGE_LAB_THREADS", "3", 1);
  ASSERT_EQ(cmd_run(cfg_b, out, err), kOk) << err.str();
  ::unsetenv("PAGE_LAB_THREADS");
  const auto a = slurp(dir.file("a.csv")), b = slurp(dir.file("b.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Parallel, WorkerCountHonoursEnvironment) {
  ::setenv("PAGE_LAB_THREADS", "2", 1);
  EXPECT_EQ(worker_count(), 2u);
  ::setenv("PAGE_LAB_THREADS", "zero", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("PAGE_LAB_THREADS");
}

TEST(Parallel, RethrowsWorkerException) {
  ::setenv("PAGE_LAB_THREADS", "2", 1);
  EXPECT_THROW(parallel_for(8, [](std::size_t k) {
                 if (k == 5) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  ::unsetenv("PAGE_LAB_THREADS");
}

TEST(Csv, DivergedReplicateRow) {
  ExperimentResult res;
  res.replicates.resize(1);
  res.replicates[0].error = "diverged";
  res.replicates[0].error_t = 7;
  res.replicates[0].error_calls = 42;
  std::ostringstream os;
  write_trajectory_csv(os, res);
  EXPECT_EQ(os.str(), std::string(kTrajectoryHeader) + "\n7,0,diverged,,,,42\n");
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, RateRejectsForeignHeader) {
  std::istringstream in("a,b,c\n1,2,3\n");
  std::vector<double> t, m;
  EXPECT_THROW(mean_psi_from_csv(in, t, m), ValidationError);
}

TEST(Sweep, GridOrderIsLastAxisFastest) {
  SweepAxes axes;
  axes.tau = {0.0, 1.0};
  axes.seed = {1, 2, 3};
  const auto grid = expand_grid(axes);
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_EQ(*grid[0].tau, 0.0);
  EXPECT_EQ(*grid[0].seed, 1u);
  EXPECT_EQ(*grid[2].seed, 3u);
  EXPECT_EQ(*grid[3].tau, 1.0);
  EXPECT_EQ(*grid[3].seed, 1u);
  EXPECT_EQ(expand_grid(SweepAxes{}).size(), 1u);
}

TEST(Sweep, KappaAxisSetsMuAndClearsPins) {
  auto c = experiment_from_json(quadratic_config());
  c.problem.pinned = SmoothnessProfile{1.0, 0.5, 0.1, 0.0};
  GridPoint g;
  g.kappa = 20.0;
  const auto applied = apply_point(c, g);
  EXPECT_DOUBLE_EQ(*applied.problem.spec.mu, 0.05);
  EXPECT_FALSE(applied.problem.pinned.has_value());
  g.kappa = 0.5;
  EXPECT_THROW(apply_point(c, g), ValidationError);
}

TEST(Sweep, InvalidPointsAreSkipped) {
  TempDir dir;
  json base = quadratic_config();
  base["horizon"] = 200;
  base["repetitions"] = 4;
  const json sweep{{"base", base},
                   {"axes", {{"gamma", {0.2, 50.0}}}},
                   {"criterion", {{"kind", "psi"}, {"epsilon_rel", 1e-3}}},
                   {"output", {{"csv", dir.file("sweep.csv")}, {"svg", dir.file("sweep.svg")}}}};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(dir.write("sweep.json", sweep), out, err), kOk) << err.str();
  EXPECT_NE(err.str().find("skipped grid point: invalid"), std::string::npos) << err.str();
  std::ifstream in(dir.file("sweep.csv"));
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, kSweepHeader);
  EXPECT_NE(first.find(",ok,"), std::string::npos) << first;
  EXPECT_NE(second.find("invalid"), std::string::npos) << second;
  EXPECT_NE(slurp(dir.file("sweep.svg")).find("<svg"), std::string::npos);
}

TEST(Sweep, AllPointsInvalidIsAValidationError) {
  TempDir dir;
  const json sweep{{"base", quadratic_config()}, {"axes", {{"gamma", {50.0}}}}};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep(dir.write("sweep.json", sweep), out, err), kValidation);
}

TEST(Sweep, SeriesMatchesRunExperiment) {
  auto c = experiment_from_json(quadratic_config());
  c.repetitions = 20;
  c.horizon = 150;
  const auto e = resolve(c);
  const auto res = run_experiment(e);
  const auto series = run_series(e);
  ASSERT_EQ(series.psi.size(), res.mean_psi.size());
  for (std::size_t t = 0; t < series.psi.size(); ++t)
    EXPECT_NEAR(series.psi[t], res.mean_psi[t], 1e-12 * std::abs(res.mean_psi[t]));

  Criterion crit;
  crit.epsilon_rel = 1e-2;
  const auto cross = first_crossing(series, crit);
  ASSERT_TRUE(cross.iterations.has_value());
  const auto t = *cross.iterations;
  EXPECT_LE(series.psi[t], 1e-2 * series.psi[0]);
  EXPECT_GT(series.psi[t - 1], 1e-2 * series.psi[0]);
}

TEST(Sweep, ResultsIndependentOfThreadCount) {
  auto c = experiment_from_json(quadratic_config());
  c.repetitions = 40;
  const auto e = resolve(c);
  ::setenv("PAGE_LAB_THREADS", "1", 1);
  const auto one = run_series(e);
  ::setenv("PAGE_LAB_THREADS", "4", 1);
  const auto four = run_series(e);
  ::unsetenv("PAGE_LAB_THREADS");
  EXPECT_EQ(one.psi, four.psi);
  EXPECT_EQ(one.grad_calls, four.grad_calls);
}

TEST(CliVerify, UnknownSuiteIsAValidationError) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify("everything", 1, out, err), kValidation);
  EXPECT_NE(err.str().find("lemmas"), std::string::npos);
}

TEST(CliVerify, CertifySuitePasses) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify("certify", 7, out, err), kOk) << out.str() << err.str();
  EXPECT_NE(out.str().find("PASS"), std::string::npos) << out.str();
}

}  // namespace
}  // namespace page::harness
