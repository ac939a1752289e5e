#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/problems.hpp"

namespace ftdo {

struct OracleSettings {
  double tol = 1e-12;
  int max_iter = 100;
};

// Ground-truth optimizer trajectories, produced independently of any flow
// integration (damped Newton on the stationarity conditions, warm-started
// across sample times).
struct ReferenceTrajectory {
  std::vector<double> times;
  std::vector<Vec> x_star;          // consensus: the common minimizer per sample
  std::vector<Vec> lam_star;        // resource allocation: dual optimum per sample
  std::vector<Mat> x_star_agents;   // resource allocation: per-agent optimal states
  std::vector<double> residuals;    // stationarity/feasibility residual per sample
};

// Minimizer of sum_i f_i(x, t) for each sample time: damped Newton on
// F(x) = sum_i grad f_i(x, t) with Jacobian sum_i H_i > 0.
inline ReferenceTrajectory consensus_optimum(const std::vector<ModelPtr>& models,
                                             const std::vector<double>& times,
                                             const OracleSettings& opts = {}) {
  require(!models.empty(), ErrorCode::invalid_config, "oracle needs cost models");
  require(!times.empty(), ErrorCode::invalid_config, "oracle needs sample times");
  const int n = models.front()->dimension();
  ReferenceTrajectory ref;
  ref.times = times;
  ref.x_star.reserve(times.size());
  ref.residuals.reserve(times.size());
  Vec x = Vec::Zero(n);
  for (const double t : times) {
    const auto total_grad = [&](const Vec& p) {
      Vec g = Vec::Zero(n);
      for (const auto& m : models) g += m->gradient(p, t);
      return g;
    };
    Vec g = total_grad(x);
    for (int iter = 0; iter < opts.max_iter && g.norm() > opts.tol; ++iter) {
      Mat h = Mat::Zero(n, n);
      for (const auto& m : models) h += m->hessian(x, t);
      const Vec step = h.llt().solve(g);
      double damping = 1.0;
      Vec candidate = x - damping * step;
      Vec g_next = total_grad(candidate);
      int backtracks = 0;
      while (g_next.norm() > g.norm() && backtracks < 60) {
        damping *= 0.5;
        candidate = x - damping * step;
        g_next = total_grad(candidate);
        ++backtracks;
      }
      x = candidate;
      g = g_next;
    }
    require(g.norm() <= opts.tol, ErrorCode::numeric_failure,
            "consensus oracle did not converge at t=" + std::to_string(t));
    ref.x_star.push_back(x);
    ref.residuals.push_back(g.norm());
  }
  return ref;
}

// Optimal allocation under sum_i x_i = sum_i d_i(t): Newton on the dual
// balance F(lam) = sum_i (x_i(lam, t) - d_i(t)) with Jacobian sum_i H_i^{-1},
// falling back to bisection for scalar multipliers.  Per-agent optima are the
// conjugate argmax at the dual solution, so stationarity holds by construction
// and `residuals` reports the feasibility gap.
inline ReferenceTrajectory dorap_optimum(const std::vector<ModelPtr>& models,
                                         const std::vector<ResourceProfile>& profiles,
                                         const std::vector<double>& times,
                                         const OracleSettings& opts = {}) {
  require(!models.empty(), ErrorCode::invalid_config, "oracle needs cost models");
  require(models.size() == profiles.size(), ErrorCode::invalid_config,
          "oracle needs one resource profile per model");
  require(!times.empty(), ErrorCode::invalid_config, "oracle needs sample times");
  const int n = models.front()->dimension();
  const int num_agents = static_cast<int>(models.size());
  ReferenceTrajectory ref;
  ref.times = times;
  Vec lam = Vec::Zero(n);
  for (const double t : times) {
    Vec total_demand = Vec::Zero(n);
    for (const auto& p : profiles) total_demand += p.demand(t);
    Mat agents(n, num_agents);
    const auto balance = [&](const Vec& mult) {
      Vec sum = Vec::Zero(n);
      for (int i = 0; i < num_agents; ++i) {
        agents.col(i) = conjugate_argmax(*models[i], mult, t, {opts.tol, opts.max_iter});
        sum += agents.col(i);
      }
      return Vec(sum - total_demand);
    };
    Vec g = balance(lam);
    bool converged = g.norm() <= opts.tol;
    for (int iter = 0; iter < opts.max_iter && !converged; ++iter) {
      Mat jac = Mat::Zero(n, n);
      for (int i = 0; i < num_agents; ++i) {
        const Mat h = models[i]->hessian(agents.col(i), t);
        jac += h.llt().solve(Mat::Identity(n, n));
      }
      const Vec step = jac.llt().solve(g);
      double damping = 1.0;
      Vec candidate = lam - damping * step;
      Vec g_next = balance(candidate);
      int backtracks = 0;
      while (g_next.norm() > g.norm() && backtracks < 60) {
        damping *= 0.5;
        candidate = lam - damping * step;
        g_next = balance(candidate);
        ++backtracks;
      }
      lam = candidate;
      g = g_next;
      converged = g.norm() <= opts.tol;
    }
    if (!converged && n == 1) {
      // The scalar balance is strictly increasing in lam: bracket and bisect.
      double lo = lam(0), hi = lam(0);
      double width = 1.0;
      Vec probe(1);
      auto eval = [&](double m) { probe(0) = m; return balance(probe)(0); };
      while (eval(lo) > 0.0) { lo -= width; width *= 2.0; }
      width = 1.0;
      while (eval(hi) < 0.0) { hi += width; width *= 2.0; }
      for (int iter = 0; iter < 200 && !converged; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double val = eval(mid);
        (val > 0.0 ? hi : lo) = mid;
        lam(0) = mid;
        converged = std::abs(val) <= opts.tol;
      }
      g = balance(lam);
      converged = g.norm() <= opts.tol;
    }
    require(converged, ErrorCode::numeric_failure,
            "allocation oracle did not converge at t=" + std::to_string(t));
    ref.lam_star.push_back(lam);
    ref.x_star_agents.push_back(agents);
    ref.residuals.push_back(g.norm());
  }
  return ref;
}

// Exact extinction time of dz = -a * sgn^{1-p}(z) started at z0 (componentwise
// decoupled): T = max_c |z0_c|^p / (a p).
inline double analytic_settling_time(const Vec& z0, double a, double p) {
  require(a > 0.0, ErrorCode::invalid_config, "gain a must be positive");
  require(p > 0.0 && p <= 1.0, ErrorCode::invalid_config,
          "exponent p must lie in (0, 1]");
  double worst = 0.0;
  for (int c = 0; c < z0.size(); ++c)
    worst = std::max(worst, std::pow(std::abs(z0(c)), p));
  return worst / (a * p);
}

}  // namespace ftdo
