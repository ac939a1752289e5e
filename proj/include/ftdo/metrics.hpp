#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/graph.hpp"
#include "ftdo/oracle.hpp"
#include "ftdo/problems.hpp"
#include "ftdo/sim.hpp"

namespace ftdo {

// log10 of the mean distance to the reference, floored at 1e-16 so exact
// zeros map to -16.  For the dual flow the distance is between recovered
// primal states and the per-agent optimal allocations.
inline std::vector<double> tracking_error(const Trajectory& traj,
                                          const ReferenceTrajectory& ref) {
  require(traj.times.size() <= ref.times.size(), ErrorCode::invalid_config,
          "reference does not cover the trajectory samples");
  std::vector<double> out;
  out.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    require(std::abs(traj.times[k] - ref.times[k]) <= 1e-9,
            ErrorCode::invalid_config, "trajectory/reference time grids differ");
    double mean = 0.0;
    if (traj.kind == FlowKind::dual_dorap) {
      const Mat& states = traj.recovered[k];
      const Mat& target = ref.x_star_agents[k];
      for (int i = 0; i < states.cols(); ++i)
        mean += (states.col(i) - target.col(i)).norm();
      mean /= static_cast<double>(states.cols());
    } else {
      const Mat& states = traj.primary[k];
      for (int i = 0; i < states.cols(); ++i)
        mean += (states.col(i) - ref.x_star[k]).norm();
      mean /= static_cast<double>(states.cols());
    }
    out.push_back(std::log10(std::max(mean, 1e-16)));
  }
  return out;
}

struct ZgsSeries {
  std::vector<double> manifold;  // || sum_i grad f_i(x_i(t), t) ||
  std::vector<double> drift;     // || sum_i grad f_i - sum_i z_i ||
};

// Zero-gradient-sum diagnostics.  For the dual flow the conserved quantity is
// the aggregate balance gap: manifold = || sum_i (x_i - d_i(t)) || on recovered
// primal states, drift compares it against sum_i z_i.
inline ZgsSeries zgs_residual(const Trajectory& traj, const std::vector<ModelPtr>& models,
                              const std::vector<ResourceProfile>& profiles = {}) {
  ZgsSeries out;
  out.manifold.reserve(traj.times.size());
  out.drift.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const int n = static_cast<int>(traj.primary[k].rows());
    Vec total = Vec::Zero(n);
    if (traj.kind == FlowKind::dual_dorap) {
      require(profiles.size() == models.size(), ErrorCode::invalid_config,
              "dual diagnostics need resource profiles");
      for (int i = 0; i < traj.recovered[k].cols(); ++i)
        total += traj.recovered[k].col(i) - profiles[i].demand(t);
    } else {
      for (int i = 0; i < traj.primary[k].cols(); ++i)
        total += models[i]->gradient(traj.primary[k].col(i), t);
    }
    Vec z_total = Vec::Zero(n);
    for (int i = 0; i < traj.aux[k].cols(); ++i) z_total += traj.aux[k].col(i);
    out.manifold.push_back(total.norm());
    out.drift.push_back((total - z_total).norm());
  }
  return out;
}

// Disagreement l1-norm V1(t) = || (B0^T kron I_n) vec(x) ||_1, i.e. the
// weighted sum over edges and components of |x_i - x_j|.
inline std::vector<double> consensus_error(const Trajectory& traj, const Network& net) {
  std::vector<double> out;
  out.reserve(traj.times.size());
  for (const Mat& states : traj.primary) {
    double v1 = 0.0;
    for (const Edge& e : net.edges())
      v1 += e.weight * (states.col(e.i) - states.col(e.j)).lpNorm<1>();
    out.push_back(v1);
  }
  return out;
}

// || sum_i x_i(t) - sum_i d_i(t) || on recovered primal states (dual flow).
inline std::vector<double> constraint_mismatch(const Trajectory& traj,
                                               const std::vector<ResourceProfile>& profiles) {
  require(traj.kind == FlowKind::dual_dorap, ErrorCode::invalid_config,
          "constraint mismatch applies to the resource-allocation flow");
  std::vector<double> out;
  out.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const int n = static_cast<int>(traj.recovered[k].rows());
    Vec gap = Vec::Zero(n);
    for (int i = 0; i < traj.recovered[k].cols(); ++i)
      gap += traj.recovered[k].col(i) - profiles[i].demand(t);
    out.push_back(gap.norm());
  }
  return out;
}

// First sample time t such that the series stays at or below `threshold` on
// the whole window [t, t + dwell]; nullopt when no such time exists.  Windows
// that extend past the horizon do not qualify.
inline std::optional<double> detect_settling(const std::vector<double>& times,
                                             const std::vector<double>& series,
                                             double threshold, double dwell) {
  require(times.size() == series.size(), ErrorCode::invalid_config,
          "settling detector needs aligned times and series");
  require(!times.empty(), ErrorCode::invalid_config, "settling detector needs samples");
  require(dwell >= 0.0, ErrorCode::invalid_config, "dwell must be nonnegative");
  const double horizon = times.back() - times.front();
  require(dwell <= horizon, ErrorCode::invalid_config,
          "dwell exceeds the recorded horizon");
  const double slack = 1e-9 * std::max(1.0, std::abs(times.back()));
  std::size_t window_end = 0;  // first index with series > threshold at or after k
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] + dwell > times.back() + slack) break;
    if (window_end < k) window_end = k;
    while (window_end < times.size() && series[window_end] <= threshold)
      ++window_end;
    if (window_end == times.size() || times[window_end] > times[k] + dwell + slack) {
      if (series[k] <= threshold) return times[k];
    }
  }
  return std::nullopt;
}

// Default settling threshold for the aggregate ||z|| series: proportional to
// the one-step movement scale of the discretized driving and coupling terms.
inline double default_settling_threshold(double h, const GainSpec& gain) {
  return 10.0 * h * (gain.a + gain.alpha);
}

}  // namespace ftdo
