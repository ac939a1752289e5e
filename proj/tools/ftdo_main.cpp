// Command-line driver: run one experiment from a JSON spec or a builtin
// scenario, or sweep a single parameter, writing CSV/JSON outputs per run.
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftdo/experiment.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    ftdo::require(pos == item.size(), ftdo::ErrorCode::invalid_config,
                  "cannot parse sweep value '" + item + "'");
    values.push_back(v);
  }
  ftdo::require(!values.empty(), ftdo::ErrorCode::invalid_config,
                "--values needs at least one number");
  return values;
}

bool is_builtin(const std::string& name) {
  for (const auto& b : ftdo::builtin_names())
    if (b == name) return true;
  return false;
}

ftdo::ExperimentSpec load_source(const std::string& source,
                                 std::optional<std::uint64_t> seed) {
  if (is_builtin(source)) return ftdo::builtin_scenario(source, seed);
  ftdo::ExperimentSpec spec = ftdo::parse_spec_file(source);
  if (seed) spec.sim.seed = *seed;
  return spec;
}

void print_run_summary(const ftdo::RunResult& result) {
  std::cout << result.summary.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-time flows for time-varying distributed optimization"};
  app.require_subcommand(1);

  std::string run_spec, out_dir;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand(
      "run", "Integrate one experiment (JSON spec file or builtin name)");
  run->add_option("spec", run_spec, "spec file path or builtin scenario name")
      ->required();
  run->add_option("--out", out_dir, "output directory (default out/<name>)");
  run->add_option("--seed", seed, "override the scenario seed");

  std::string builtin_name;
  bool emit_spec = false;
  auto* builtin = app.add_subcommand(
      "builtin", "Run a builtin scenario, or print its spec with --emit-spec");
  builtin->add_option("name", builtin_name, "one of: case1, case1_noise, case2, smoke_centralized")
      ->required();
  builtin->add_flag("--emit-spec", emit_spec, "print the canonical JSON spec and exit");
  builtin->add_option("--out", out_dir, "output directory (default out/<name>)");
  builtin->add_option("--seed", seed, "override the scenario seed");

  std::string sweep_spec, sweep_param, sweep_values;
  auto* sweep = app.add_subcommand(
      "sweep", "Run one experiment repeatedly while varying one parameter");
  sweep->add_option("spec", sweep_spec, "spec file path or builtin scenario name")
      ->required();
  sweep->add_option("--param", sweep_param, "alpha, a, p, h, or link_sigma")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated parameter values")
      ->required();
  sweep->add_option("--out", out_dir, "output directory (default out/<name>_sweep_<param>)");
  sweep->add_option("--seed", seed, "override the scenario seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ftdo::ExperimentSpec spec = load_source(run_spec, seed);
      const std::string out = out_dir.empty() ? "out/" + spec.name : out_dir;
      const ftdo::RunResult result = ftdo::run_experiment(spec, out);
      print_run_summary(result);
      if (result.trajectory.diverged) {
        std::cerr << "error: trajectory diverged at step "
                  << *result.trajectory.diverged_step << "\n";
        return static_cast<int>(ftdo::ErrorCode::divergence);
      }
      return 0;
    }
    if (builtin->parsed()) {
      const ftdo::ExperimentSpec spec = ftdo::builtin_scenario(builtin_name, seed);
      if (emit_spec) {
        std::cout << ftdo::spec_to_json(spec).dump(2) << "\n";
        return 0;
      }
      const std::string out = out_dir.empty() ? "out/" + spec.name : out_dir;
      const ftdo::RunResult result = ftdo::run_experiment(spec, out);
      print_run_summary(result);
      if (result.trajectory.diverged) {
        std::cerr << "error: trajectory diverged at step "
                  << *result.trajectory.diverged_step << "\n";
        return static_cast<int>(ftdo::ErrorCode::divergence);
      }
      return 0;
    }
    // sweep
    const ftdo::ExperimentSpec spec = load_source(sweep_spec, seed);
    const std::vector<double> values = parse_values(sweep_values);
    const std::string out =
        out_dir.empty() ? "out/" + spec.name + "_sweep_" + sweep_param : out_dir;
    const ftdo::SweepResult result = ftdo::sweep(spec, sweep_param, values, out);
    std::cout << "wrote " << result.summary_path << " (" << result.runs.size()
              << " runs)\n";
    return 0;
  } catch (const ftdo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
