#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ftdo/experiment.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using ftdo::Edge;
using ftdo::ExperimentSpec;
using ftdo::FlowKind;
using ftdo::GainSpec;
using ftdo::PhiVariant;
using ftdo::ProblemFamily;
using ftdo::QuadraticAgentSpec;
using ftdo::TimeSignal;
using ftdo::Vec;
namespace tu = testutil;

namespace {

std::vector<std::string> file_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string fresh_dir(const std::string& leaf) {
  const std::string dir = "exp_out/" + leaf;
  fs::remove_all(dir);
  return dir;
}

QuadraticAgentSpec quad_agent(double curvature, TimeSignal drift) {
  QuadraticAgentSpec agent;
  agent.coefficients = Vec::Constant(1, curvature);
  agent.drift = {std::move(drift)};
  return agent;
}

// Two quadratic agents joined by a unit edge; the base for sweep tests.
ExperimentSpec pair_spec() {
  ExperimentSpec spec;
  spec.name = "pair";
  spec.nodes = 2;
  spec.edges = {{1, 2, 1.0}};
  spec.problem.family = ProblemFamily::affine_drift_quadratic;
  spec.problem.quadratic_agents = {quad_agent(1.0, TimeSignal::constant(1.0)),
                                   quad_agent(2.0, TimeSignal::constant(-1.0))};
  spec.flow_kind = FlowKind::consensus_zgs;
  spec.gain = {PhiVariant::power_sign, 2.0, 0.0, 0.5, 2.0, 2.0, 0.5};
  spec.sim.h = 0.01;
  spec.sim.t_end = 0.2;
  spec.sim.record_every = 2;
  spec.init_primary.resize(1, 2);
  spec.init_primary << 0.5, -0.5;
  return spec;
}

const char* kPairJson = R"({
  "name": "pair",
  "network": {"nodes": 2, "edges": [[1, 2]]},
  "problem": {
    "family": "affine_drift_quadratic",
    "agents": [
      {"coefficients": [1.0], "drift": [{"constant": 1.0}]},
      {"coefficients": [2.0], "drift": [{"constant": -1.0}]}
    ]
  },
  "flow": {"kind": "consensus_zgs", "gain": {"a": 2.0, "p": 0.5, "alpha": 1.0}},
  "sim": {"h": 0.01, "t_end": 0.5, "record_every": 5},
  "oracle": {"enabled": true, "tol": 1e-12},
  "init": {"primary": [[0.5], [-0.5]]}
})";

}  // namespace

TEST_CASE("specs survive a serialization round trip", "[experiment]") {
  for (const std::string name : {"case1", "case2", "smoke_centralized"}) {
    const ExperimentSpec spec = ftdo::builtin_scenario(name);
    const ftdo::Json first = ftdo::spec_to_json(spec);
    const ExperimentSpec reparsed = ftdo::spec_from_json(first);
    CHECK(ftdo::spec_to_json(reparsed).dump() == first.dump());
  }
}

TEST_CASE("builtin catalogue", "[experiment]") {
  const auto names = ftdo::builtin_names();
  CHECK(names == std::vector<std::string>{"case1", "case1_noise", "case2",
                                          "smoke_centralized"});
  CHECK(tu::thrown_code([] { ftdo::builtin_scenario("nope"); }) ==
        static_cast<int>(ftdo::ErrorCode::invalid_config));
  CHECK_THAT(tu::thrown_message([] { ftdo::builtin_scenario("nope"); }),
             Catch::Matchers::ContainsSubstring("unknown builtin scenario 'nope'"));
}

TEST_CASE("allocation benchmark is pinned", "[experiment]") {
  const ExperimentSpec spec = ftdo::builtin_scenario("case2");
  REQUIRE(spec.flow_kind == FlowKind::dual_dorap);
  REQUIRE(spec.problem.quadratic_agents.size() == 12);
  const auto models = ftdo::build_models(spec);
  // Agent 1 carries curvature 2.1 and zero drift/offset at t = 0.
  Vec one = Vec::Constant(1, 1.0);
  CHECK(models[0]->value(one, 0.0) == Catch::Approx(1.05).margin(1e-15));
  // Demand d_1(0) = 1 + sin(pi/12).
  CHECK(spec.problem.resources[0].demand(0.0)(0) ==
        Catch::Approx(1.2588190451025207).margin(1e-15));
  CHECK(spec.gain.alpha == 5.0);
  CHECK(spec.sim.h == 0.2e-3);
}

TEST_CASE("classification benchmark follows its data law", "[experiment]") {
  const ExperimentSpec spec = ftdo::builtin_scenario("case1");
  const auto models = ftdo::build_models(spec);
  const auto* logistic = dynamic_cast<const ftdo::TVLogistic*>(models[0].get());
  REQUIRE(logistic != nullptr);
  // The feature vector doubles when w t reaches a quarter period.
  const Vec at0 = logistic->data_vector(0.0);
  const Vec at5 = logistic->data_vector(5.0);
  CHECK((at5 - 2.0 * at0).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("noisy benchmark shares the clean draws", "[experiment]") {
  const ExperimentSpec clean = ftdo::builtin_scenario("case1");
  const ExperimentSpec noisy = ftdo::builtin_scenario("case1_noise");
  CHECK(clean.name == "case1");
  CHECK(noisy.name == "case1_noise");
  CHECK((clean.init_primary - noisy.init_primary).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(clean.sim.noise.link_sigma == 0.0);
  CHECK(noisy.sim.noise.link_sigma == 0.01);
  CHECK(noisy.sim.noise.drift_sigma == 0.01);
}

TEST_CASE("seed override reshuffles the scenario draws", "[experiment]") {
  const ExperimentSpec base = ftdo::builtin_scenario("case1");
  const ExperimentSpec other = ftdo::builtin_scenario("case1", 99);
  CHECK(other.sim.seed == 99);
  CHECK((base.init_primary - other.init_primary).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("config parsing rejects malformed input", "[experiment]") {
  CHECK(tu::thrown_code([] { ftdo::parse_spec_text("{ nope"); }) ==
        static_cast<int>(ftdo::ErrorCode::invalid_config));
  CHECK_THAT(tu::thrown_message([] { ftdo::parse_spec_text("{ nope"); }),
             Catch::Matchers::ContainsSubstring("config is not valid JSON"));
  CHECK(tu::thrown_code([] { ftdo::parse_spec_file("no_such_spec.json"); }) ==
        static_cast<int>(ftdo::ErrorCode::io_error));
}

TEST_CASE("config parsing rejects unknown keys", "[experiment]") {
  auto reject = [](ftdo::Json j, const std::string& expect) {
    const std::string text = j.dump();
    CHECK(tu::thrown_code([&] { ftdo::parse_spec_text(text); }) ==
          static_cast<int>(ftdo::ErrorCode::invalid_config));
    CHECK_THAT(tu::thrown_message([&] { ftdo::parse_spec_text(text); }),
               Catch::Matchers::ContainsSubstring(expect));
  };
  const ftdo::Json base = ftdo::Json::parse(kPairJson);
  ftdo::Json top = base;
  top["extra"] = 1;
  reject(top, "unknown key 'extra' in experiment spec");
  ftdo::Json sim = base;
  sim["sim"]["dt"] = 0.1;
  reject(sim, "unknown key 'dt' in sim");
  ftdo::Json gain = base;
  gain["flow"]["gain"]["kappa"] = 1.0;
  reject(gain, "unknown key 'kappa' in gain");
}

TEST_CASE("invalid experiments leave no outputs behind", "[experiment]") {
  ExperimentSpec spec = pair_spec();
  spec.nodes = 4;
  spec.edges = {{1, 2, 1.0}, {3, 4, 1.0}};
  spec.problem.quadratic_agents = {quad_agent(1.0, TimeSignal::constant(0.0)),
                                   quad_agent(1.0, TimeSignal::constant(0.0)),
                                   quad_agent(1.0, TimeSignal::constant(0.0)),
                                   quad_agent(1.0, TimeSignal::constant(0.0))};
  spec.init_primary.resize(1, 4);
  spec.init_primary << 1.0, 2.0, 3.0, 4.0;
  const std::string dir = fresh_dir("disconnected");
  CHECK(tu::thrown_code([&] { ftdo::run_experiment(spec, dir); }) ==
        static_cast<int>(ftdo::ErrorCode::disconnected_graph));
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("experiments write the full output bundle", "[experiment]") {
  const ExperimentSpec spec = ftdo::parse_spec_text(kPairJson);
  const std::string dir = fresh_dir("pair");
  const ftdo::RunResult result = ftdo::run_experiment(spec, dir);

  for (const char* leaf :
       {"trajectory.csv", "metrics.csv", "reference.csv", "summary.json"})
    CHECK(fs::exists(dir + "/" + std::string(leaf)));

  // h = 0.01 over t_end = 0.5 recorded every 5 steps: 11 samples.
  const auto traj_lines = file_lines(dir + "/trajectory.csv");
  REQUIRE(traj_lines.size() == 12);
  CHECK(traj_lines[0] == "t,x1_1,x2_1,z1_1,z2_1");
  const auto metric_lines = file_lines(dir + "/metrics.csv");
  REQUIRE(metric_lines.size() == 12);
  CHECK(metric_lines[0] == "t,ex,v1,zgs_manifold,zgs_drift,z_norm");
  CHECK(file_lines(dir + "/reference.csv")[0] == "t,xstar_1,residual");

  ftdo::Json summary;
  std::ifstream in(dir + "/summary.json");
  in >> summary;
  CHECK(summary["name"] == "pair");
  CHECK(summary["flow"] == "consensus_zgs");
  CHECK(summary["agents"] == 2);
  CHECK(summary["edges"] == 1);
  CHECK(summary["dimension"] == 1);
  CHECK(summary["theta_lo"].get<double>() == 1.0);
  CHECK(summary["theta_hi"].get<double>() == 2.0);
  CHECK(summary["kappa"].get<double>() == 0.0);
  CHECK(summary["lambda2"].get<double>() == Catch::Approx(2.0).margin(1e-9));
  CHECK(summary["alpha_exceeds_bound"].get<bool>() == true);
  CHECK(summary["diverged"].get<bool>() == false);
  CHECK(summary["outputs"]["reference"] == "reference.csv");
  CHECK(result.metrics.ex.size() == result.trajectory.times.size());
}

TEST_CASE("gain sweeps run one experiment per value", "[experiment]") {
  const std::string dir = fresh_dir("sweep_alpha");
  const std::vector<double> values = {0.5, 1.0, 2.0};
  const ftdo::SweepResult result = ftdo::sweep(pair_spec(), "alpha", values, dir);
  REQUIRE(result.runs.size() == 3);
  CHECK(result.failures.empty());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(result.runs[i].spec.gain.alpha == values[i]);
    CHECK(result.runs[i].out_dir ==
          dir + "/alpha=" + ftdo::fmt_double(values[i]));
    CHECK(fs::exists(result.runs[i].out_dir + "/summary.json"));
  }
  const auto lines = file_lines(result.summary_path);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "value,error_code,settled_at,final_ex,final_mismatch,diverged");
}

TEST_CASE("a failing sweep point is recorded and skipped", "[experiment]") {
  const std::string dir = fresh_dir("sweep_bad_h");
  const ftdo::SweepResult result =
      ftdo::sweep(pair_spec(), "h", {0.01, -1.0, 0.02}, dir);
  CHECK(result.runs.size() == 2);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].value == -1.0);
  CHECK(result.failures[0].code == ftdo::ErrorCode::invalid_config);
  const auto lines = file_lines(result.summary_path);
  REQUIRE(lines.size() == 4);
  CHECK(lines[2] == "-1,2,nan,nan,nan,nan");
  CHECK(tu::thrown_code([] {
          ftdo::apply_sweep_value(pair_spec(), "bogus", 1.0);
        }) == static_cast<int>(ftdo::ErrorCode::invalid_config));
}

TEST_CASE("step sweeps show first-order conservation drift", "[experiment]") {
  ExperimentSpec spec = pair_spec();
  spec.problem.quadratic_agents.clear();
  QuadraticAgentSpec first = quad_agent(1.0, TimeSignal::linear(1.0));
  first.squared_affine = true;
  QuadraticAgentSpec second = quad_agent(2.0, TimeSignal::sine(1.0, 1.0));
  second.squared_affine = true;
  spec.problem.quadratic_agents = {first, second};
  spec.gain = {PhiVariant::power_sign, 1.0, 0.0, 0.5, 2.0, 2.0, 1.0};
  spec.sim.t_end = 2.0;
  spec.sim.record_every = 10;
  spec.oracle_enabled = false;

  const std::string dir = fresh_dir("sweep_h");
  const ftdo::SweepResult result = ftdo::sweep(spec, "h", {1e-3, 5e-4}, dir);
  REQUIRE(result.runs.size() == 2);
  const double coarse = result.runs[0].metrics.zgs_drift.back();
  const double fine = result.runs[1].metrics.zgs_drift.back();
  REQUIRE(coarse > 1e-6);
  const double ratio = coarse / fine;
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.5);
}

TEST_CASE("link noise breaks exact convergence", "[experiment]") {
  // Symmetric pure-sign pair on a dyadic grid: the noiseless run freezes at
  // the optimum exactly, so its tracking error sits on the floor, while any
  // link noise keeps kicking the states off zero by one step each sample.
  ExperimentSpec spec = pair_spec();
  spec.problem.quadratic_agents = {quad_agent(1.0, TimeSignal::constant(0.0)),
                                   quad_agent(1.0, TimeSignal::constant(0.0))};
  spec.gain = {PhiVariant::power_sign, 1.0, 0.0, 1.0, 2.0, 2.0, 1.0};
  spec.sim.h = 0.0078125;  // 2^-7
  spec.sim.t_end = 2.0;
  spec.sim.record_every = 1;
  spec.sim.seed = 7;
  spec.init_primary << 1.0, -1.0;

  const std::string dir = fresh_dir("sweep_sigma");
  const ftdo::SweepResult result =
      ftdo::sweep(spec, "link_sigma", {0.0, 0.01}, dir);
  REQUIRE(result.runs.size() == 2);
  CHECK(result.runs[0].spec.sim.noise.link_sigma == 0.0);

  const auto& clean = result.runs[0].metrics.ex;
  const auto& noisy = result.runs[1].metrics.ex;
  REQUIRE(clean.size() == 257);
  CHECK(clean.back() < -12.0);
  const double noisy_tail = std::max(noisy[noisy.size() - 2], noisy.back());
  CHECK(noisy_tail > -3.0);
  CHECK(noisy_tail > clean.back() + 5.0);
}
