#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/flows.hpp"
#include "ftdo/graph.hpp"
#include "ftdo/problems.hpp"
#include "ftdo/rng.hpp"

namespace ftdo {

struct NoiseSpec {
  double link_sigma = 0.0;   // std-dev on each directed neighbor reading
  double drift_sigma = 0.0;  // std-dev on each time-partial reading

  bool any() const { return link_sigma > 0.0 || drift_sigma > 0.0; }

  void validate() const {
    require(link_sigma >= 0.0 && drift_sigma >= 0.0, ErrorCode::invalid_config,
            "noise std-devs must be nonnegative");
  }
};

struct SimConfig {
  double h = 1e-3;          // explicit Euler step
  double t_end = 1.0;       // horizon
  int record_every = 1;     // sample stride (must divide the step count)
  std::uint64_t seed = 0;   // noise stream seed
  NoiseSpec noise;
  double divergence_guard = 1e9;  // inf-norm ceiling on any state vector

  std::int64_t num_steps() const {
    return static_cast<std::int64_t>(std::llround(t_end / h));
  }

  void validate() const {
    require(h > 0.0, ErrorCode::invalid_config, "step size h must be positive");
    require(t_end >= h, ErrorCode::invalid_config,
            "horizon must cover at least one step");
    require(record_every >= 1, ErrorCode::invalid_config,
            "record_every must be at least 1");
    const std::int64_t steps = num_steps();
    require(std::abs(steps * h - t_end) <= 1e-9 * std::max(1.0, t_end),
            ErrorCode::invalid_config, "horizon must be an integer number of steps");
    require(steps % record_every == 0, ErrorCode::invalid_config,
            "record_every must divide the step count evenly");
    require(divergence_guard > 0.0, ErrorCode::invalid_config,
            "divergence guard must be positive");
    noise.validate();
  }
};

// Initial condition: `primary` holds x(0) (or the multipliers lam(0) for the
// dual flow), one column per agent.  `aux` optionally pins z(0); when present
// it must satisfy the flow's initialization contract, otherwise z(0) is
// derived from that contract.
struct InitState {
  Mat primary;
  std::optional<Mat> aux;
};

struct Trajectory {
  FlowKind kind = FlowKind::centralized;
  double h = 0.0;
  int record_every = 1;
  std::vector<double> times;
  std::vector<Mat> primary;    // n x N per sample (x, or lam for the dual flow)
  std::vector<Mat> aux;        // n x N per sample (integrator state z)
  std::vector<Mat> recovered;  // n x N per sample, dual flow primal states
  bool diverged = false;
  std::optional<std::int64_t> diverged_step;
  std::optional<double> settled_at;  // filled by the metrics pipeline
};

// Additive Gaussian perturbation of a measurement vector.
inline Vec inject_noise(const Vec& reading, double sigma, SplitMix64& rng) {
  require(sigma >= 0.0, ErrorCode::invalid_config, "noise sigma must be nonnegative");
  NoiseCtx ctx{sigma, 0.0, &rng};
  return maybe_perturb(reading, sigma, &ctx);
}

namespace detail {

inline Mat contract_aux_init(FlowKind kind, const std::vector<ModelPtr>& models,
                             const std::vector<ResourceProfile>& profiles,
                             const Mat& primary0) {
  const int n = static_cast<int>(primary0.rows());
  const int num_agents = static_cast<int>(primary0.cols());
  Mat aux(n, num_agents);
  for (int i = 0; i < num_agents; ++i) {
    if (kind == FlowKind::dual_dorap) {
      const Vec x0 = conjugate_argmax(*models[i], primary0.col(i), 0.0);
      aux.col(i) = x0 - profiles[i].demand(0.0);
    } else {
      aux.col(i) = models[i]->gradient(primary0.col(i), 0.0);
    }
  }
  return aux;
}

inline bool state_ok(const Mat& m, double guard) {
  return m.allFinite() && m.lpNorm<Eigen::Infinity>() <= guard;
}

}  // namespace detail

// Explicit Euler integration of the selected flow.  Single-threaded with a
// fixed reduction order, so runs are bitwise deterministic for a given seed.
// Integration stops early (diverged flag + first bad step index) if any state
// leaves the guard region or turns non-finite.
inline Trajectory euler_run(FlowKind kind, const std::vector<ModelPtr>& models,
                            const std::vector<ResourceProfile>& profiles,
                            const Network& net, const GainSpec& gain,
                            const InitState& init, const SimConfig& cfg) {
  cfg.validate();
  gain.validate();
  const int num_agents = net.num_nodes();
  require(static_cast<int>(models.size()) == num_agents, ErrorCode::invalid_config,
          "need exactly one cost model per agent");
  require(!models.empty(), ErrorCode::invalid_config, "no cost models given");
  const int n = models.front()->dimension();
  for (const auto& m : models)
    require(m->dimension() == n, ErrorCode::invalid_config,
            "all agents must share the state dimension");
  if (kind == FlowKind::dual_dorap) {
    require(static_cast<int>(profiles.size()) == num_agents,
            ErrorCode::invalid_config, "dual flow needs one resource profile per agent");
    for (const auto& p : profiles)
      require(p.dimension() == n, ErrorCode::invalid_config,
              "resource profile dimension mismatch");
  }
  if (kind == FlowKind::centralized)
    require(num_agents == 1, ErrorCode::invalid_config,
            "centralized flow runs on a single-node network");
  require(init.primary.rows() == n && init.primary.cols() == num_agents,
          ErrorCode::invalid_config, "initial state must be n x N");

  Mat primary = init.primary;
  Mat aux = detail::contract_aux_init(kind, models, profiles, primary);
  if (init.aux.has_value()) {
    require(init.aux->rows() == n && init.aux->cols() == num_agents,
            ErrorCode::invalid_config, "initial integrator state must be n x N");
    const double scale = 1.0 + aux.lpNorm<Eigen::Infinity>();
    require((*init.aux - aux).lpNorm<Eigen::Infinity>() <= 1e-9 * scale,
            ErrorCode::invalid_config,
            "initial integrator state violates the flow's initialization contract");
    aux = *init.aux;
  }

  SplitMix64 rng(cfg.seed);
  NoiseCtx noise_ctx{cfg.noise.link_sigma, cfg.noise.drift_sigma, &rng};
  NoiseCtx* noise = cfg.noise.any() ? &noise_ctx : nullptr;

  Trajectory traj;
  traj.kind = kind;
  traj.h = cfg.h;
  traj.record_every = cfg.record_every;
  const std::int64_t steps = cfg.num_steps();
  const std::int64_t samples = steps / cfg.record_every + 1;
  traj.times.reserve(samples);
  traj.primary.reserve(samples);
  traj.aux.reserve(samples);
  if (kind == FlowKind::dual_dorap) traj.recovered.reserve(samples);

  Mat recovered;  // dual flow primal states at the current time
  const auto record = [&](std::int64_t step) {
    traj.times.push_back(step * cfg.h);
    traj.primary.push_back(primary);
    traj.aux.push_back(aux);
    if (kind == FlowKind::dual_dorap) traj.recovered.push_back(recovered);
  };

  require(detail::state_ok(primary, cfg.divergence_guard) &&
              detail::state_ok(aux, cfg.divergence_guard),
          ErrorCode::invalid_config, "initial state violates the divergence guard");

  if (kind == FlowKind::dual_dorap) {
    recovered.resize(n, num_agents);
    for (int i = 0; i < num_agents; ++i)
      recovered.col(i) = conjugate_argmax(*models[i], primary.col(i), 0.0);
  }
  record(0);

  Mat warm_primal = recovered;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = k * cfg.h;
    switch (kind) {
      case FlowKind::centralized: {
        const CentralizedRhs rhs =
            rhs_centralized(*models[0], gain, primary.col(0), aux.col(0), t, noise);
        primary.col(0) += cfg.h * rhs.dx;
        aux.col(0) += cfg.h * rhs.dz;
        break;
      }
      case FlowKind::consensus_zgs: {
        const AgentsRhs rhs =
            rhs_consensus(models, net, gain, primary, aux, t, noise);
        primary += cfg.h * rhs.dprimary;
        aux += cfg.h * rhs.daux;
        break;
      }
      case FlowKind::dual_dorap: {
        const AgentsRhs rhs = rhs_dual_dorap(models, profiles, net, gain, primary,
                                             aux, t, noise, &warm_primal);
        warm_primal = rhs.recovered;
        primary += cfg.h * rhs.dprimary;
        aux += cfg.h * rhs.daux;
        break;
      }
    }
    if (!detail::state_ok(primary, cfg.divergence_guard) ||
        !detail::state_ok(aux, cfg.divergence_guard)) {
      traj.diverged = true;
      traj.diverged_step = k + 1;
      break;
    }
    if ((k + 1) % cfg.record_every == 0) {
      if (kind == FlowKind::dual_dorap) {
        const double t_next = (k + 1) * cfg.h;
        recovered.resize(n, num_agents);
        for (int i = 0; i < num_agents; ++i) {
          const Vec warm = warm_primal.col(i);
          recovered.col(i) =
              conjugate_argmax(*models[i], primary.col(i), t_next, {}, &warm);
        }
      }
      record(k + 1);
    }
  }
  return traj;
}

}  // namespace ftdo
