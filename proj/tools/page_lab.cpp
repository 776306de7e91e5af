#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "page/harness/cli.hpp"

int main(int argc, char** argv) {
  namespace h = page::harness;
  CLI::App app{"page-lab: seeded PAGE experiments, sweeps and verification suites"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run R seeded trajectories and write the per-iteration CSV");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid to an accuracy target");
  sweep->add_option("config", sweep_config, "Sweep config (JSON)")->required();

  std::string suite;
  std::uint64_t seed = 20240601;
  auto* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("suite", suite, "lemmas | contraction | descent | rollout | certify")->required();
  verify->add_option("--seed", seed, "Master seed");

  std::string csv;
  auto* rate = app.add_subcommand("rate", "Fit the linear rate of mean psi from a trajectory CSV");
  rate->add_option("csv", csv, "Trajectory CSV written by `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? h::kOk : h::kValidation;
  }

  if (*run) return h::cmd_run(run_config, std::cout, std::cerr);
  if (*sweep) return h::cmd_sweep(sweep_config, std::cout, std::cerr);
  if (*verify) return h::cmd_verify(suite, seed, std::cout, std::cerr);
  if (*rate) return h::cmd_rate(csv, std::cout, std::cerr);
  return h::kValidation;
}
