#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftdo/csv.hpp"
#include "ftdo/errors.hpp"
#include "ftdo/flows.hpp"
#include "ftdo/graph.hpp"
#include "ftdo/metrics.hpp"
#include "ftdo/oracle.hpp"
#include "ftdo/problems.hpp"
#include "ftdo/rng.hpp"
#include "ftdo/sim.hpp"

namespace ftdo {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

enum class ProblemFamily { affine_drift_quadratic, tv_logistic };

struct QuadraticAgentSpec {
  bool squared_affine = false;
  Vec coefficients;                // curvature (quadratic) or affine slope
  std::vector<TimeSignal> drift;   // one per component
  TimeSignal offset;               // quadratic mode only
};

struct LogisticAgentSpec {
  int label = 1;
  Vec y0;
  double w = 0.0;
  double beta = 1.0;
  double region_radius = 4.0;
};

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::affine_drift_quadratic;
  std::vector<QuadraticAgentSpec> quadratic_agents;
  std::vector<LogisticAgentSpec> logistic_agents;
  std::vector<ResourceProfile> resources;  // dual flow only

  int num_agents() const {
    return family == ProblemFamily::tv_logistic
               ? static_cast<int>(logistic_agents.size())
               : static_cast<int>(quadratic_agents.size());
  }
};

struct ExperimentSpec {
  std::string name;
  int nodes = 0;
  std::vector<Edge> edges;  // 1-based endpoints, as in config files
  ProblemSpec problem;
  FlowKind flow_kind = FlowKind::consensus_zgs;
  GainSpec gain;
  SimConfig sim;
  bool oracle_enabled = true;
  double oracle_tol = 1e-12;
  Mat init_primary;  // n x N
  std::optional<Mat> init_aux;
};

inline std::vector<ModelPtr> build_models(const ExperimentSpec& spec) {
  std::vector<ModelPtr> models;
  if (spec.problem.family == ProblemFamily::tv_logistic) {
    for (const auto& a : spec.problem.logistic_agents)
      models.push_back(std::make_shared<TVLogistic>(a.label, a.y0, a.w, a.beta,
                                                    a.region_radius));
  } else {
    for (const auto& a : spec.problem.quadratic_agents) {
      models.push_back(std::make_shared<AffineDriftQuadratic>(
          a.squared_affine ? AffineDriftQuadratic::squared_affine(a.coefficients, a.drift)
                           : AffineDriftQuadratic::quadratic(a.coefficients, a.drift,
                                                             a.offset)));
    }
  }
  return models;
}

inline Network build_network(const ExperimentSpec& spec) {
  return Network::from_edges(spec.nodes, spec.edges);
}

inline void validate_spec(const ExperimentSpec& spec) {
  require(!spec.name.empty(), ErrorCode::invalid_config, "experiment needs a name");
  const Network net = build_network(spec);
  require(spec.problem.num_agents() == spec.nodes, ErrorCode::invalid_config,
          "need exactly one cost model per network node");
  spec.gain.validate();
  spec.sim.validate();
  require(spec.oracle_tol > 0.0, ErrorCode::invalid_config,
          "oracle tolerance must be positive");
  const std::vector<ModelPtr> models = build_models(spec);
  const int n = models.front()->dimension();
  for (const auto& m : models)
    require(m->dimension() == n, ErrorCode::invalid_config,
            "all agents must share the state dimension");
  if (spec.flow_kind == FlowKind::dual_dorap) {
    require(static_cast<int>(spec.problem.resources.size()) == spec.nodes,
            ErrorCode::invalid_config,
            "resource-allocation flow needs one demand profile per agent");
    for (const auto& p : spec.problem.resources)
      require(p.dimension() == n, ErrorCode::invalid_config,
              "demand profile dimension mismatch");
  } else {
    require(spec.problem.resources.empty(), ErrorCode::invalid_config,
            "demand profiles are only meaningful for the resource-allocation flow");
  }
  if (spec.flow_kind == FlowKind::centralized) {
    require(spec.nodes == 1, ErrorCode::invalid_config,
            "centralized flow runs on a single-node network");
  } else {
    require_connected(net);
  }
  require(spec.init_primary.rows() == n && spec.init_primary.cols() == spec.nodes,
          ErrorCode::invalid_config,
          "initial state must provide one n-vector per agent");
}

// ---------------------------------------------------------------------------
// JSON schema (strict: unknown keys are rejected)
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& context) {
  require(obj.is_object(), ErrorCode::invalid_config, context + " must be an object");
  for (const auto& item : obj.items())
    require(allowed.count(item.key()) > 0, ErrorCode::invalid_config,
            "unknown key '" + item.key() + "' in " + context);
}

inline double get_num(const Json& obj, const std::string& key, const std::string& ctx) {
  require(obj.contains(key), ErrorCode::invalid_config, ctx + " needs '" + key + "'");
  require(obj.at(key).is_number(), ErrorCode::invalid_config,
          "'" + key + "' in " + ctx + " must be a number");
  return obj.at(key).get<double>();
}

inline double get_num_or(const Json& obj, const std::string& key, double fallback,
                         const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  require(obj.at(key).is_number(), ErrorCode::invalid_config,
          "'" + key + "' in " + ctx + " must be a number");
  return obj.at(key).get<double>();
}

inline Json signal_to_json(const TimeSignal& s) {
  Json j;
  j["constant"] = s.constant_term();
  j["slope"] = s.slope();
  Json terms = Json::array();
  for (const auto& term : s.sinusoids()) {
    Json t;
    t["amplitude"] = term.amplitude;
    t["frequency"] = term.frequency;
    t["phase"] = term.phase;
    terms.push_back(t);
  }
  j["sinusoids"] = terms;
  return j;
}

inline TimeSignal signal_from_json(const Json& j, const std::string& ctx) {
  check_keys(j, {"constant", "slope", "sinusoids"}, ctx);
  TimeSignal s = TimeSignal::linear(get_num_or(j, "slope", 0.0, ctx),
                                    get_num_or(j, "constant", 0.0, ctx));
  if (j.contains("sinusoids")) {
    require(j.at("sinusoids").is_array(), ErrorCode::invalid_config,
            "'sinusoids' in " + ctx + " must be an array");
    for (const auto& term : j.at("sinusoids")) {
      check_keys(term, {"amplitude", "frequency", "phase"}, ctx + " sinusoid");
      s.add({get_num(term, "amplitude", ctx), get_num(term, "frequency", ctx),
             get_num_or(term, "phase", 0.0, ctx)});
    }
  }
  return s;
}

inline Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (int c = 0; c < v.size(); ++c) j.push_back(v(c));
  return j;
}

inline Vec vec_from_json(const Json& j, const std::string& ctx) {
  require(j.is_array() && !j.empty(), ErrorCode::invalid_config,
          ctx + " must be a nonempty array");
  Vec v(j.size());
  for (std::size_t c = 0; c < j.size(); ++c) {
    require(j[c].is_number(), ErrorCode::invalid_config,
            ctx + " must contain numbers");
    v(static_cast<int>(c)) = j[c].get<double>();
  }
  return v;
}

inline Json mat_to_json(const Mat& m) {
  Json cols = Json::array();
  for (int i = 0; i < m.cols(); ++i) cols.push_back(vec_to_json(m.col(i)));
  return cols;
}

inline Mat mat_from_json(const Json& j, const std::string& ctx) {
  require(j.is_array() && !j.empty(), ErrorCode::invalid_config,
          ctx + " must be a nonempty array of per-agent arrays");
  std::vector<Vec> cols;
  for (const auto& col : j) cols.push_back(vec_from_json(col, ctx + " entry"));
  const int n = static_cast<int>(cols.front().size());
  Mat m(n, static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    require(cols[i].size() == n, ErrorCode::invalid_config,
            ctx + " entries must share one dimension");
    m.col(static_cast<int>(i)) = cols[i];
  }
  return m;
}

inline std::string flow_kind_name(FlowKind kind) {
  switch (kind) {
    case FlowKind::centralized: return "centralized";
    case FlowKind::consensus_zgs: return "consensus_zgs";
    case FlowKind::dual_dorap: return "dual_dorap";
  }
  return "";
}

inline FlowKind flow_kind_from_name(const std::string& name) {
  if (name == "centralized") return FlowKind::centralized;
  if (name == "consensus_zgs") return FlowKind::consensus_zgs;
  if (name == "dual_dorap") return FlowKind::dual_dorap;
  fail(ErrorCode::invalid_config, "unknown flow kind '" + name + "'");
}

}  // namespace detail

inline Json spec_to_json(const ExperimentSpec& spec) {
  using detail::mat_to_json;
  using detail::signal_to_json;
  using detail::vec_to_json;
  Json j;
  j["name"] = spec.name;
  Json network;
  network["nodes"] = spec.nodes;
  Json edges = Json::array();
  for (const Edge& e : spec.edges) edges.push_back(Json::array({e.i, e.j, e.weight}));
  network["edges"] = edges;
  j["network"] = network;

  Json problem;
  problem["family"] = spec.problem.family == ProblemFamily::tv_logistic
                          ? "tv_logistic"
                          : "affine_drift_quadratic";
  Json agents = Json::array();
  if (spec.problem.family == ProblemFamily::tv_logistic) {
    for (const auto& a : spec.problem.logistic_agents) {
      Json agent;
      agent["label"] = a.label;
      agent["y0"] = vec_to_json(a.y0);
      agent["w"] = a.w;
      agent["beta"] = a.beta;
      agent["region_radius"] = a.region_radius;
      agents.push_back(agent);
    }
  } else {
    for (const auto& a : spec.problem.quadratic_agents) {
      Json agent;
      agent["mode"] = a.squared_affine ? "squared_affine" : "quadratic";
      agent["coefficients"] = vec_to_json(a.coefficients);
      Json drift = Json::array();
      for (const auto& s : a.drift) drift.push_back(signal_to_json(s));
      agent["drift"] = drift;
      if (!a.squared_affine) agent["offset"] = signal_to_json(a.offset);
      agents.push_back(agent);
    }
  }
  problem["agents"] = agents;
  if (!spec.problem.resources.empty()) {
    Json resources = Json::array();
    for (const auto& p : spec.problem.resources) {
      Json demand = Json::array();
      for (const auto& s : p.signals()) demand.push_back(signal_to_json(s));
      Json r;
      r["demand"] = demand;
      resources.push_back(r);
    }
    problem["resources"] = resources;
  }
  j["problem"] = problem;

  Json flow;
  flow["kind"] = detail::flow_kind_name(spec.flow_kind);
  Json gain;
  gain["variant"] =
      spec.gain.variant == PhiVariant::power_sign ? "power_sign" : "norm_scaled";
  gain["a"] = spec.gain.a;
  gain["b"] = spec.gain.b;
  gain["p"] = spec.gain.p;
  gain["q"] = spec.gain.q;
  gain["r"] = spec.gain.r;
  gain["alpha"] = spec.gain.alpha;
  flow["gain"] = gain;
  j["flow"] = flow;

  Json sim;
  sim["h"] = spec.sim.h;
  sim["t_end"] = spec.sim.t_end;
  sim["record_every"] = spec.sim.record_every;
  sim["seed"] = spec.sim.seed;
  Json noise;
  noise["link_sigma"] = spec.sim.noise.link_sigma;
  noise["drift_sigma"] = spec.sim.noise.drift_sigma;
  sim["noise"] = noise;
  sim["divergence_guard"] = spec.sim.divergence_guard;
  j["sim"] = sim;

  Json oracle;
  oracle["enabled"] = spec.oracle_enabled;
  oracle["tol"] = spec.oracle_tol;
  j["oracle"] = oracle;

  Json init;
  init["primary"] = mat_to_json(spec.init_primary);
  if (spec.init_aux) init["aux"] = mat_to_json(*spec.init_aux);
  j["init"] = init;
  return j;
}

inline ExperimentSpec spec_from_json(const Json& j) {
  using detail::check_keys;
  using detail::get_num;
  using detail::get_num_or;
  ExperimentSpec spec;
  check_keys(j, {"name", "network", "problem", "flow", "sim", "oracle", "init"},
             "experiment spec");
  require(j.contains("name") && j.at("name").is_string(), ErrorCode::invalid_config,
          "spec needs a string 'name'");
  spec.name = j.at("name").get<std::string>();

  require(j.contains("network"), ErrorCode::invalid_config, "spec needs 'network'");
  const Json& network = j.at("network");
  check_keys(network, {"nodes", "edges"}, "network");
  spec.nodes = static_cast<int>(get_num(network, "nodes", "network"));
  require(network.contains("edges") && network.at("edges").is_array(),
          ErrorCode::invalid_config, "network needs an 'edges' array");
  for (const auto& e : network.at("edges")) {
    require(e.is_array() && (e.size() == 2 || e.size() == 3),
            ErrorCode::invalid_config,
            "each edge must be [i, j] or [i, j, weight]");
    Edge edge;
    edge.i = e[0].get<int>();
    edge.j = e[1].get<int>();
    edge.weight = e.size() == 3 ? e[2].get<double>() : 1.0;
    spec.edges.push_back(edge);
  }

  require(j.contains("problem"), ErrorCode::invalid_config, "spec needs 'problem'");
  const Json& problem = j.at("problem");
  check_keys(problem, {"family", "agents", "resources"}, "problem");
  require(problem.contains("family") && problem.at("family").is_string(),
          ErrorCode::invalid_config, "problem needs a string 'family'");
  const std::string family = problem.at("family").get<std::string>();
  require(problem.contains("agents") && problem.at("agents").is_array() &&
              !problem.at("agents").empty(),
          ErrorCode::invalid_config, "problem needs a nonempty 'agents' array");
  if (family == "tv_logistic") {
    spec.problem.family = ProblemFamily::tv_logistic;
    for (const auto& a : problem.at("agents")) {
      check_keys(a, {"label", "y0", "w", "beta", "region_radius"}, "logistic agent");
      LogisticAgentSpec agent;
      agent.label = static_cast<int>(get_num(a, "label", "logistic agent"));
      agent.y0 = detail::vec_from_json(a.at("y0"), "'y0'");
      agent.w = get_num(a, "w", "logistic agent");
      agent.beta = get_num(a, "beta", "logistic agent");
      agent.region_radius = get_num_or(a, "region_radius", 4.0, "logistic agent");
      spec.problem.logistic_agents.push_back(std::move(agent));
    }
  } else if (family == "affine_drift_quadratic") {
    spec.problem.family = ProblemFamily::affine_drift_quadratic;
    for (const auto& a : problem.at("agents")) {
      check_keys(a, {"mode", "coefficients", "drift", "offset"}, "quadratic agent");
      QuadraticAgentSpec agent;
      const std::string mode =
          a.contains("mode") ? a.at("mode").get<std::string>() : "quadratic";
      require(mode == "quadratic" || mode == "squared_affine",
              ErrorCode::invalid_config, "unknown quadratic mode '" + mode + "'");
      agent.squared_affine = (mode == "squared_affine");
      require(a.contains("coefficients"), ErrorCode::invalid_config,
              "quadratic agent needs 'coefficients'");
      agent.coefficients = detail::vec_from_json(a.at("coefficients"), "'coefficients'");
      require(a.contains("drift") && a.at("drift").is_array(),
              ErrorCode::invalid_config, "quadratic agent needs a 'drift' array");
      for (const auto& s : a.at("drift"))
        agent.drift.push_back(detail::signal_from_json(s, "drift signal"));
      if (a.contains("offset")) {
        require(!agent.squared_affine, ErrorCode::invalid_config,
                "offset is only meaningful in quadratic mode");
        agent.offset = detail::signal_from_json(a.at("offset"), "offset signal");
      }
      spec.problem.quadratic_agents.push_back(std::move(agent));
    }
  } else {
    fail(ErrorCode::invalid_config, "unknown problem family '" + family + "'");
  }
  if (problem.contains("resources")) {
    require(problem.at("resources").is_array(), ErrorCode::invalid_config,
            "'resources' must be an array");
    for (const auto& r : problem.at("resources")) {
      check_keys(r, {"demand"}, "resource profile");
      require(r.contains("demand") && r.at("demand").is_array(),
              ErrorCode::invalid_config, "resource profile needs a 'demand' array");
      std::vector<TimeSignal> demand;
      for (const auto& s : r.at("demand"))
        demand.push_back(detail::signal_from_json(s, "demand signal"));
      spec.problem.resources.emplace_back(std::move(demand));
    }
  }

  require(j.contains("flow"), ErrorCode::invalid_config, "spec needs 'flow'");
  const Json& flow = j.at("flow");
  check_keys(flow, {"kind", "gain"}, "flow");
  require(flow.contains("kind") && flow.at("kind").is_string(),
          ErrorCode::invalid_config, "flow needs a string 'kind'");
  spec.flow_kind = detail::flow_kind_from_name(flow.at("kind").get<std::string>());
  require(flow.contains("gain"), ErrorCode::invalid_config, "flow needs 'gain'");
  const Json& gain = flow.at("gain");
  check_keys(gain, {"variant", "a", "b", "p", "q", "r", "alpha"}, "gain");
  if (gain.contains("variant")) {
    const std::string variant = gain.at("variant").get<std::string>();
    require(variant == "power_sign" || variant == "norm_scaled",
            ErrorCode::invalid_config, "unknown gain variant '" + variant + "'");
    spec.gain.variant = variant == "power_sign" ? PhiVariant::power_sign
                                                : PhiVariant::norm_scaled;
  }
  spec.gain.a = get_num_or(gain, "a", 1.0, "gain");
  spec.gain.b = get_num_or(gain, "b", 0.0, "gain");
  spec.gain.p = get_num_or(gain, "p", 1.0, "gain");
  spec.gain.q = get_num_or(gain, "q", 2.0, "gain");
  spec.gain.r = get_num_or(gain, "r", 2.0, "gain");
  spec.gain.alpha = get_num_or(gain, "alpha", 0.0, "gain");

  require(j.contains("sim"), ErrorCode::invalid_config, "spec needs 'sim'");
  const Json& sim = j.at("sim");
  check_keys(sim, {"h", "t_end", "record_every", "seed", "noise", "divergence_guard"},
             "sim");
  spec.sim.h = get_num(sim, "h", "sim");
  spec.sim.t_end = get_num(sim, "t_end", "sim");
  spec.sim.record_every =
      static_cast<int>(get_num_or(sim, "record_every", 1.0, "sim"));
  if (sim.contains("seed")) {
    require(sim.at("seed").is_number_unsigned() || sim.at("seed").is_number_integer(),
            ErrorCode::invalid_config, "'seed' must be an unsigned integer");
    spec.sim.seed = sim.at("seed").get<std::uint64_t>();
  }
  if (sim.contains("noise")) {
    const Json& noise = sim.at("noise");
    check_keys(noise, {"link_sigma", "drift_sigma"}, "noise");
    spec.sim.noise.link_sigma = get_num_or(noise, "link_sigma", 0.0, "noise");
    spec.sim.noise.drift_sigma = get_num_or(noise, "drift_sigma", 0.0, "noise");
  }
  spec.sim.divergence_guard = get_num_or(sim, "divergence_guard", 1e9, "sim");

  if (j.contains("oracle")) {
    const Json& oracle = j.at("oracle");
    check_keys(oracle, {"enabled", "tol"}, "oracle");
    if (oracle.contains("enabled")) {
      require(oracle.at("enabled").is_boolean(), ErrorCode::invalid_config,
              "'enabled' must be a boolean");
      spec.oracle_enabled = oracle.at("enabled").get<bool>();
    }
    spec.oracle_tol = get_num_or(oracle, "tol", 1e-12, "oracle");
  }

  require(j.contains("init"), ErrorCode::invalid_config, "spec needs 'init'");
  const Json& init = j.at("init");
  detail::check_keys(init, {"primary", "aux"}, "init");
  require(init.contains("primary"), ErrorCode::invalid_config,
          "init needs 'primary' states");
  spec.init_primary = detail::mat_from_json(init.at("primary"), "'init.primary'");
  if (init.contains("aux"))
    spec.init_aux = detail::mat_from_json(init.at("aux"), "'init.aux'");

  validate_spec(spec);
  return spec;
}

inline ExperimentSpec parse_spec_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("config is not valid JSON: ") + e.what());
  }
  return spec_from_json(j);
}

inline ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot read spec file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_spec_text(text);
}

// ---------------------------------------------------------------------------
// Builtin scenarios
// ---------------------------------------------------------------------------

inline std::vector<Edge> circulant_edges(int n, const std::vector<int>& strides) {
  std::set<std::pair<int, int>> dedupe;
  std::vector<Edge> edges;
  for (const int stride : strides) {
    for (int i = 0; i < n; ++i) {
      const int a = i;
      const int b = (i + stride) % n;
      const int lo = std::min(a, b), hi = std::max(a, b);
      if (lo == hi) continue;
      if (dedupe.insert({lo, hi}).second) edges.push_back({lo + 1, hi + 1, 1.0});
    }
  }
  return edges;
}

// The builtin 12-node topology: a ring with distance-3 chords (circulant
// C12(1,3)), unit weights, spectral gap 4 - sqrt(3).
inline std::vector<Edge> builtin_twelve_node_edges() {
  return circulant_edges(12, {1, 3});
}

constexpr std::uint64_t kBuiltinSeed = 42;

namespace detail {

// Scenario draw procedure (documented): one SplitMix64 stream keyed by the
// scenario tag; case study 1 draws per agent beta ~ U{1..8}, label ~ U{-1,+1},
// y0 ~ U[0,1]^2, then per agent x(0) ~ U[0,1]^2; case study 2 draws per agent
// lam(0) ~ U[0,1].
inline ExperimentSpec builtin_case1(std::uint64_t seed, bool with_noise) {
  ExperimentSpec spec;
  spec.name = with_noise ? "case1_noise" : "case1";
  spec.nodes = 12;
  spec.edges = builtin_twelve_node_edges();
  spec.problem.family = ProblemFamily::tv_logistic;
  SplitMix64 draw(SplitMix64::mix(seed, 0x63617331ull));
  const double w = std::numbers::pi / 10.0;
  for (int i = 0; i < 12; ++i) {
    LogisticAgentSpec agent;
    agent.beta = static_cast<double>(draw.next_int(1, 8));
    agent.label = (draw.next_u64() & 1u) ? 1 : -1;
    agent.y0 = Vec(2);
    agent.y0 << draw.next_double(), draw.next_double();
    agent.w = w;
    agent.region_radius = 4.0;
    spec.problem.logistic_agents.push_back(std::move(agent));
  }
  spec.init_primary.resize(2, 12);
  for (int i = 0; i < 12; ++i) {
    spec.init_primary(0, i) = draw.next_double();
    spec.init_primary(1, i) = draw.next_double();
  }
  spec.flow_kind = FlowKind::consensus_zgs;
  spec.gain = {PhiVariant::power_sign, 10.0, 0.0, 0.5, 2.0, 2.0, 4.0};
  spec.sim.h = 0.4e-3;
  spec.sim.t_end = 5.0;
  spec.sim.record_every = 10;
  spec.sim.seed = seed;
  if (with_noise) spec.sim.noise = {0.01, 0.01};
  return spec;
}

inline ExperimentSpec builtin_case2(std::uint64_t seed) {
  ExperimentSpec spec;
  spec.name = "case2";
  spec.nodes = 12;
  spec.edges = builtin_twelve_node_edges();
  spec.problem.family = ProblemFamily::affine_drift_quadratic;
  SplitMix64 draw(SplitMix64::mix(seed, 0x63617332ull));
  for (int i = 1; i <= 12; ++i) {
    QuadraticAgentSpec agent;
    agent.coefficients = Vec::Constant(1, 2.0 + 0.1 * i);
    agent.drift = {TimeSignal::sine(1.0, 0.1 * i)};
    agent.offset = TimeSignal::sine(1.0, 0.6 * i);
    spec.problem.quadratic_agents.push_back(std::move(agent));
    TimeSignal demand = TimeSignal::sine(1.0, 1.0, i * std::numbers::pi / 12.0);
    demand.shift(static_cast<double>(i));
    spec.problem.resources.emplace_back(std::vector<TimeSignal>{demand});
  }
  spec.init_primary.resize(1, 12);
  for (int i = 0; i < 12; ++i) spec.init_primary(0, i) = draw.next_double();
  spec.flow_kind = FlowKind::dual_dorap;
  spec.gain = {PhiVariant::power_sign, 10.0, 0.0, 0.5, 2.0, 2.0, 5.0};
  spec.sim.h = 0.2e-3;
  spec.sim.t_end = 5.0;
  spec.sim.record_every = 10;
  spec.sim.seed = seed;
  return spec;
}

// Single-agent tracker f(x,t) = 1/2 ||x - r(t)||^2 with r(t) = [sin t, cos t],
// written as a quadratic with drift -r(t) and constant offset 1/2.
inline ExperimentSpec builtin_smoke_centralized(std::uint64_t seed) {
  ExperimentSpec spec;
  spec.name = "smoke_centralized";
  spec.nodes = 1;
  spec.problem.family = ProblemFamily::affine_drift_quadratic;
  QuadraticAgentSpec agent;
  agent.coefficients = Vec::Constant(2, 1.0);
  agent.drift = {TimeSignal::sine(-1.0, 1.0),
                 TimeSignal::sine(-1.0, 1.0, std::numbers::pi / 2.0)};
  agent.offset = TimeSignal::constant(0.5);
  spec.problem.quadratic_agents.push_back(std::move(agent));
  spec.init_primary.resize(2, 1);
  spec.init_primary << 3.0, -3.0;
  spec.flow_kind = FlowKind::centralized;
  spec.gain = {PhiVariant::power_sign, 5.0, 0.0, 0.5, 2.0, 2.0, 0.0};
  spec.sim.h = 1e-4;
  spec.sim.t_end = 5.0;
  spec.sim.record_every = 10;
  spec.sim.seed = seed;
  return spec;
}

}  // namespace detail

inline std::vector<std::string> builtin_names() {
  return {"case1", "case1_noise", "case2", "smoke_centralized"};
}

inline ExperimentSpec builtin_scenario(const std::string& name,
                                       std::optional<std::uint64_t> seed = std::nullopt) {
  const std::uint64_t s = seed.value_or(kBuiltinSeed);
  ExperimentSpec spec;
  if (name == "case1") spec = detail::builtin_case1(s, false);
  else if (name == "case1_noise") spec = detail::builtin_case1(s, true);
  else if (name == "case2") spec = detail::builtin_case2(s);
  else if (name == "smoke_centralized") spec = detail::builtin_smoke_centralized(s);
  else fail(ErrorCode::invalid_config, "unknown builtin scenario '" + name + "'");
  validate_spec(spec);
  return spec;
}

// ---------------------------------------------------------------------------
// Run pipeline
// ---------------------------------------------------------------------------

struct MetricSeries {
  std::vector<double> times;
  std::vector<double> ex;            // tracking error, oracle-based
  std::vector<double> v1;            // disagreement l1-norm (distributed flows)
  std::vector<double> zgs_manifold;
  std::vector<double> zgs_drift;
  std::vector<double> mismatch;      // dual flow only
  std::vector<double> z_norm;        // aggregate integrator norm
  std::optional<double> settled_at;
};

inline MetricSeries compute_metrics(const Trajectory& traj,
                                    const ReferenceTrajectory* ref, const Network& net,
                                    const std::vector<ModelPtr>& models,
                                    const std::vector<ResourceProfile>& profiles,
                                    const GainSpec& gain) {
  MetricSeries m;
  m.times = traj.times;
  if (ref != nullptr) m.ex = tracking_error(traj, *ref);
  if (traj.kind != FlowKind::centralized) m.v1 = consensus_error(traj, net);
  const ZgsSeries zgs = zgs_residual(traj, models, profiles);
  m.zgs_manifold = zgs.manifold;
  m.zgs_drift = zgs.drift;
  if (traj.kind == FlowKind::dual_dorap)
    m.mismatch = constraint_mismatch(traj, profiles);
  m.z_norm.reserve(traj.times.size());
  for (const Mat& z : traj.aux) m.z_norm.push_back(z.norm());
  if (m.times.size() >= 2) {
    const double horizon = m.times.back() - m.times.front();
    m.settled_at = detect_settling(m.times, m.z_norm,
                                   default_settling_threshold(traj.h, gain),
                                   std::min(0.5, horizon));
  }
  return m;
}

inline void write_metrics_csv(const std::string& path, const MetricSeries& m) {
  std::vector<std::string> header{"t"};
  if (!m.ex.empty()) header.push_back("ex");
  if (!m.v1.empty()) header.push_back("v1");
  header.push_back("zgs_manifold");
  header.push_back("zgs_drift");
  if (!m.mismatch.empty()) header.push_back("mismatch");
  header.push_back("z_norm");
  CsvWriter csv(path, header);
  std::vector<double> row;
  for (std::size_t k = 0; k < m.times.size(); ++k) {
    row.clear();
    row.push_back(m.times[k]);
    if (!m.ex.empty()) row.push_back(m.ex[k]);
    if (!m.v1.empty()) row.push_back(m.v1[k]);
    row.push_back(m.zgs_manifold[k]);
    row.push_back(m.zgs_drift[k]);
    if (!m.mismatch.empty()) row.push_back(m.mismatch[k]);
    row.push_back(m.z_norm[k]);
    csv.row(row);
  }
}

struct RunResult {
  ExperimentSpec spec;
  Network net;
  Trajectory trajectory;
  std::optional<ReferenceTrajectory> reference;
  MetricSeries metrics;
  Json summary;
  std::string out_dir;
};

inline Json build_summary(const ExperimentSpec& spec, const Network& net,
                          const std::vector<ModelPtr>& models,
                          const Trajectory& traj, const MetricSeries& metrics) {
  Json summary;
  summary["name"] = spec.name;
  summary["flow"] = detail::flow_kind_name(spec.flow_kind);
  summary["agents"] = net.num_nodes();
  summary["edges"] = net.num_edges();
  summary["dimension"] = models.front()->dimension();
  summary["h"] = spec.sim.h;
  summary["t_end"] = spec.sim.t_end;
  summary["seed"] = spec.sim.seed;
  summary["noise"] = {{"link_sigma", spec.sim.noise.link_sigma},
                      {"drift_sigma", spec.sim.noise.drift_sigma}};

  double theta_lo = std::numeric_limits<double>::infinity();
  double theta_hi = 0.0;
  std::optional<double> kappa = 0.0;
  for (const auto& m : models) {
    theta_lo = std::min(theta_lo, m->theta_lo());
    theta_hi = std::max(theta_hi, m->theta_hi());
    if (kappa.has_value()) {
      const auto k = m->kappa();
      if (k.has_value()) *kappa = std::max(*kappa, *k);
      else kappa.reset();
    }
  }
  summary["theta_lo"] = theta_lo;
  summary["theta_hi"] = theta_hi;
  if (kappa) summary["kappa"] = *kappa;
  else summary["kappa"] = nullptr;

  if (net.num_edges() > 0) {
    const SpectralInfo spectral = lambda2_pos(build_incidence(net));
    summary["lambda2"] = spectral.lambda2;
    summary["alpha"] = spec.gain.alpha;
    Json bound;
    if (spec.flow_kind == FlowKind::dual_dorap && kappa.has_value()) {
      double delta = 0.0;
      for (const auto& p : spec.problem.resources)
        delta = std::max(delta, p.delta_bound());
      bound["kind"] = "dual";
      bound["delta"] = delta;
      bound["value"] = gain_bound_dorap(*kappa, delta, theta_lo, theta_hi,
                                        net.num_nodes(), spectral.lambda2);
    } else if (spec.flow_kind == FlowKind::consensus_zgs && kappa.has_value()) {
      bound["kind"] = "consensus";
      bound["value"] = gain_bound_consensus(*kappa, net.num_nodes(), theta_hi,
                                            theta_lo, spectral.lambda2);
    }
    if (bound.contains("value")) {
      summary["gain_bound"] = bound;
      summary["alpha_exceeds_bound"] = spec.gain.alpha > bound["value"].get<double>();
    } else {
      summary["gain_bound"] = nullptr;
      summary["alpha_exceeds_bound"] = nullptr;
    }
  } else {
    summary["lambda2"] = nullptr;
    summary["alpha"] = nullptr;
    summary["gain_bound"] = nullptr;
    summary["alpha_exceeds_bound"] = nullptr;
  }

  summary["settled_at"] =
      metrics.settled_at ? Json(*metrics.settled_at) : Json(nullptr);
  summary["final_ex"] = metrics.ex.empty() ? Json(nullptr) : Json(metrics.ex.back());
  summary["final_mismatch"] =
      metrics.mismatch.empty() ? Json(nullptr) : Json(metrics.mismatch.back());
  summary["diverged"] = traj.diverged;
  summary["diverged_step"] =
      traj.diverged_step ? Json(*traj.diverged_step) : Json(nullptr);
  return summary;
}

inline RunResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  validate_spec(spec);
  RunResult result;
  result.spec = spec;
  result.net = build_network(spec);
  result.out_dir = out_dir;
  const std::vector<ModelPtr> models = build_models(spec);
  const std::vector<ResourceProfile>& profiles = spec.problem.resources;

  InitState init{spec.init_primary, spec.init_aux};
  const auto wall_start = std::chrono::steady_clock::now();
  result.trajectory = euler_run(spec.flow_kind, models, profiles, result.net,
                                spec.gain, init, spec.sim);
  const double wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();

  if (spec.oracle_enabled) {
    const OracleSettings opts{spec.oracle_tol, 200};
    result.reference =
        spec.flow_kind == FlowKind::dual_dorap
            ? dorap_optimum(models, profiles, result.trajectory.times, opts)
            : consensus_optimum(models, result.trajectory.times, opts);
  }
  result.metrics = compute_metrics(result.trajectory,
                                   result.reference ? &*result.reference : nullptr,
                                   result.net, models, profiles, spec.gain);
  result.trajectory.settled_at = result.metrics.settled_at;
  result.summary = build_summary(spec, result.net, models, result.trajectory,
                                 result.metrics);
  // Wall-clock is reported for orientation only; no real-time claim is made.
  const auto steps_taken = result.trajectory.diverged_step
                               ? static_cast<long long>(*result.trajectory.diverged_step)
                               : static_cast<long long>(
                                     std::llround(spec.sim.t_end / spec.sim.h));
  result.summary["wall_seconds"] = wall_seconds;
  result.summary["wall_us_per_step"] =
      steps_taken > 0 ? Json(1e6 * wall_seconds / static_cast<double>(steps_taken))
                      : Json(nullptr);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::io_error, "cannot create output directory " + out_dir);
  Json outputs;
  outputs["trajectory"] = "trajectory.csv";
  outputs["metrics"] = "metrics.csv";
  write_trajectory_csv(out_dir + "/trajectory.csv", result.trajectory);
  write_metrics_csv(out_dir + "/metrics.csv", result.metrics);
  if (result.reference) {
    write_reference_csv(out_dir + "/reference.csv", *result.reference);
    outputs["reference"] = "reference.csv";
  }
  result.summary["outputs"] = outputs;
  std::ofstream summary_out(out_dir + "/summary.json");
  require(summary_out.good(), ErrorCode::io_error,
          "cannot write summary.json in " + out_dir);
  summary_out << result.summary.dump(2) << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

inline ExperimentSpec apply_sweep_value(ExperimentSpec spec, const std::string& param,
                                        double value) {
  if (param == "alpha") spec.gain.alpha = value;
  else if (param == "a") spec.gain.a = value;
  else if (param == "p") spec.gain.p = value;
  else if (param == "h") spec.sim.h = value;
  else if (param == "link_sigma") spec.sim.noise.link_sigma = value;
  else fail(ErrorCode::invalid_config,
            "unknown sweep parameter '" + param +
                "' (expected alpha, a, p, h, or link_sigma)");
  return spec;
}

struct SweepFailure {
  double value = 0.0;
  ErrorCode code = ErrorCode::invalid_config;
  std::string message;
};

struct SweepResult {
  std::vector<RunResult> runs;       // successful runs, in value order
  std::vector<SweepFailure> failures;
  std::string summary_path;
};

// One run per value with a shared seed; a failing run is recorded in the
// summary table (nonzero error code) and the sweep continues.
inline SweepResult sweep(const ExperimentSpec& base, const std::string& param,
                         const std::vector<double>& values, const std::string& out_dir) {
  require(!values.empty(), ErrorCode::invalid_config, "sweep needs at least one value");
  SweepResult result;
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::io_error, "cannot create output directory " + out_dir);
  CsvWriter table(out_dir + "/sweep_summary.csv",
                  {"value", "error_code", "settled_at", "final_ex", "final_mismatch",
                   "diverged"});
  result.summary_path = out_dir + "/sweep_summary.csv";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const double value : values) {
    const std::string run_dir = out_dir + "/" + param + "=" + fmt_double(value);
    try {
      const ExperimentSpec spec = apply_sweep_value(base, param, value);
      RunResult run = run_experiment(spec, run_dir);
      table.row({value, 0.0,
                 run.metrics.settled_at ? *run.metrics.settled_at : nan,
                 run.metrics.ex.empty() ? nan : run.metrics.ex.back(),
                 run.metrics.mismatch.empty() ? nan : run.metrics.mismatch.back(),
                 run.trajectory.diverged ? 1.0 : 0.0});
      result.runs.push_back(std::move(run));
    } catch (const Error& e) {
      table.row({value, static_cast<double>(static_cast<int>(e.code())), nan, nan,
                 nan, nan});
      result.failures.push_back({value, e.code(), e.what()});
    }
  }
  return result;
}

}  // namespace ftdo
