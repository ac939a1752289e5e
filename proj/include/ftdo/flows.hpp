#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/graph.hpp"
#include "ftdo/problems.hpp"
#include "ftdo/rng.hpp"

namespace ftdo {

enum class FlowKind { centralized, consensus_zgs, dual_dorap };

enum class PhiVariant { power_sign, norm_scaled };

// sign(x) * |x|^alpha with the convention sgn_pow(0, .) = 0; exponent 0 gives
// the plain sign function away from zero.
inline double sgn_pow(double x, double alpha) {
  if (x == 0.0) return 0.0;
  if (alpha == 0.0) return x > 0.0 ? 1.0 : -1.0;
  return x > 0.0 ? std::pow(x, alpha) : -std::pow(-x, alpha);
}

// Driving-term parameters: the finite-time component a (exponent 1-p) plus an
// optional fixed-time component b (exponent q), and the coupling gain alpha
// used by the distributed flows.
struct GainSpec {
  PhiVariant variant = PhiVariant::power_sign;
  double a = 1.0;    // finite-time gain, > 0
  double b = 0.0;    // fixed-time gain, >= 0
  double p = 1.0;    // finite-time exponent parameter, in (0, 1]
  double q = 2.0;    // fixed-time exponent, > 1 (used when b > 0)
  double r = 2.0;    // norm order for the norm_scaled variant, >= 1
  double alpha = 0.0;  // sign-coupling gain, >= 0 (calculators say what suffices)

  void validate() const {
    require(a > 0.0, ErrorCode::invalid_config, "gain a must be positive");
    require(b >= 0.0, ErrorCode::invalid_config, "gain b must be nonnegative");
    require(p > 0.0 && p <= 1.0, ErrorCode::invalid_config,
            "exponent p must lie in (0, 1]");
    require(q > 1.0, ErrorCode::invalid_config, "exponent q must exceed 1");
    require(r >= 1.0, ErrorCode::invalid_config, "norm order r must be >= 1");
    require(alpha >= 0.0, ErrorCode::invalid_config,
            "coupling gain alpha must be nonnegative");
  }
};

// Driving function phi(z), componentwise for power_sign:
//   a * sgn^{1-p}(z) + b * sgn^{q}(z)
// and direction-preserving for norm_scaled:
//   a * z / ||z||_r^p + b * z * ||z||_r^{q-1},
// with phi(0) = 0 in both variants.
inline Vec phi(const GainSpec& gain, const Vec& z) {
  Vec out(z.size());
  if (gain.variant == PhiVariant::power_sign) {
    for (int c = 0; c < z.size(); ++c) {
      out(c) = gain.a * sgn_pow(z(c), 1.0 - gain.p);
      if (gain.b > 0.0) out(c) += gain.b * sgn_pow(z(c), gain.q);
    }
    return out;
  }
  double norm = 0.0;
  for (int c = 0; c < z.size(); ++c) norm += std::pow(std::abs(z(c)), gain.r);
  norm = std::pow(norm, 1.0 / gain.r);
  if (norm == 0.0) return Vec::Zero(z.size());
  out = gain.a * z / std::pow(norm, gain.p);
  if (gain.b > 0.0) out += gain.b * z * std::pow(norm, gain.q - 1.0);
  return out;
}

// Optional measurement noise wired into the right-hand sides: link_sigma
// perturbs each directed neighbor reading before the sign coupling, and
// drift_sigma perturbs the time-partial term each agent reads.  Null context
// (or zero sigmas) means exact readings.
struct NoiseCtx {
  double link_sigma = 0.0;
  double drift_sigma = 0.0;
  SplitMix64* rng = nullptr;
};

inline Vec maybe_perturb(const Vec& reading, double sigma, NoiseCtx* noise) {
  if (noise == nullptr || sigma <= 0.0 || noise->rng == nullptr) return reading;
  Vec out = reading;
  for (int c = 0; c < out.size(); ++c) out(c) += sigma * noise->rng->next_normal();
  return out;
}

struct CentralizedRhs {
  Vec dx;
  Vec dz;
};

// Centralized finite-time tracker:
//   dx = -H(x,t)^{-1} (phi(z) + time-partial of grad f),   dz = -phi(z),
// with z(0) = grad f(x(0), 0) so that z(t) reproduces grad f(x(t), t).
inline CentralizedRhs rhs_centralized(const TVCostModel& model, const GainSpec& gain,
                                      const Vec& x, const Vec& z, double t,
                                      NoiseCtx* noise = nullptr) {
  CentralizedRhs out;
  const Mat h = model.hessian(x, t);
  const Vec drift = maybe_perturb(model.grad_time_partial(x, t),
                                  noise ? noise->drift_sigma : 0.0, noise);
  const Vec driving = phi(gain, z);
  out.dx = -h.llt().solve(driving + drift);
  out.dz = -driving;
  return out;
}

struct AgentsRhs {
  Mat dprimary;   // n x N, time derivative of the flowed variable
  Mat daux;       // n x N, time derivative of the integrator state z
  Mat recovered;  // n x N, primal states x_i(lam_i, t); dual flow only
};

// Consensus flow on the zero-gradient-sum manifold.  Per agent:
//   dx_i = -H_i(x_i,t)^{-1} (phi(z_i) + time-partial_i + alpha * sum_j a_ij sgn(x_i - x_j))
//   dz_i = -phi(z_i)
// Neighbor readings are perturbed per directed edge when noise is active;
// sgn acts componentwise with sgn(0) = 0.
inline AgentsRhs rhs_consensus(const std::vector<ModelPtr>& models, const Network& net,
                               const GainSpec& gain, const Mat& x, const Mat& z,
                               double t, NoiseCtx* noise = nullptr) {
  const int n = static_cast<int>(x.rows());
  const int num_agents = static_cast<int>(x.cols());
  AgentsRhs out;
  out.dprimary.resize(n, num_agents);
  out.daux.resize(n, num_agents);
  for (int i = 0; i < num_agents; ++i) {
    const Vec xi = x.col(i);
    Vec coupling = Vec::Zero(n);
    for (const auto& [j, w] : net.neighbors(i)) {
      const Vec reading =
          maybe_perturb(x.col(j), noise ? noise->link_sigma : 0.0, noise);
      for (int c = 0; c < n; ++c)
        coupling(c) += w * sgn_pow(xi(c) - reading(c), 0.0);
    }
    const Mat h = models[i]->hessian(xi, t);
    const Vec drift = maybe_perturb(models[i]->grad_time_partial(xi, t),
                                    noise ? noise->drift_sigma : 0.0, noise);
    const Vec driving = phi(gain, z.col(i));
    out.dprimary.col(i) = -h.llt().solve(driving + drift + gain.alpha * coupling);
    out.daux.col(i) = -driving;
  }
  return out;
}

// Dual resource-allocation flow.  Per agent, with x_i = conjugate argmax at
// (lam_i, t) and dual surfaces g_i:
//   dlam_i = -H_i(x_i,t) (phi(z_i) - dual-time-partial_i + alpha * sum_j a_ij sgn(lam_i - lam_j))
//   dz_i   = -phi(z_i)
// The Hessian multiplies (no inversion); recovered primal states are returned.
inline AgentsRhs rhs_dual_dorap(const std::vector<ModelPtr>& models,
                                const std::vector<ResourceProfile>& profiles,
                                const Network& net, const GainSpec& gain,
                                const Mat& lam, const Mat& z, double t,
                                NoiseCtx* noise = nullptr,
                                const Mat* warm_primal = nullptr) {
  const int n = static_cast<int>(lam.rows());
  const int num_agents = static_cast<int>(lam.cols());
  AgentsRhs out;
  out.dprimary.resize(n, num_agents);
  out.daux.resize(n, num_agents);
  out.recovered.resize(n, num_agents);
  for (int i = 0; i < num_agents; ++i) {
    const Vec li = lam.col(i);
    Vec coupling = Vec::Zero(n);
    for (const auto& [j, w] : net.neighbors(i)) {
      const Vec reading =
          maybe_perturb(lam.col(j), noise ? noise->link_sigma : 0.0, noise);
      for (int c = 0; c < n; ++c)
        coupling(c) += w * sgn_pow(li(c) - reading(c), 0.0);
    }
    Vec warm;
    if (warm_primal) warm = warm_primal->col(i);
    const DualSurfaces surf =
        dual_surfaces(*models[i], profiles[i], li, t, {},
                      warm_primal ? &warm : nullptr);
    out.recovered.col(i) = surf.x_star;
    const Vec dual_tp = maybe_perturb(surf.dual_time_partial,
                                      noise ? noise->drift_sigma : 0.0, noise);
    const Mat h = models[i]->hessian(surf.x_star, t);
    const Vec driving = phi(gain, z.col(i));
    out.dprimary.col(i) = -h * (driving - dual_tp + gain.alpha * coupling);
    out.daux.col(i) = -driving;
  }
  return out;
}

// --- Coupling-gain calculators -------------------------------------------
//
// Sufficient sign-coupling gains for finite-time consensus of the distributed
// flows.  kappa (and delta) may be zero for static problems; the remaining
// arguments must be positive with theta_hi >= theta_lo.

namespace detail {
inline void check_gain_args(double kappa, int num_agents, double theta_hi,
                            double theta_lo, double lambda2) {
  require(kappa >= 0.0, ErrorCode::invalid_config, "kappa must be nonnegative");
  require(num_agents >= 1, ErrorCode::invalid_config, "agent count must be positive");
  require(theta_lo > 0.0 && theta_hi > 0.0, ErrorCode::invalid_config,
          "curvature bounds must be positive");
  require(theta_hi >= theta_lo, ErrorCode::invalid_config,
          "theta_hi must be at least theta_lo");
  require(lambda2 > 0.0, ErrorCode::invalid_config,
          "spectral gap lambda2 must be positive");
}
}  // namespace detail

// alpha > kappa * sqrt(N * theta_hi / (theta_lo * lambda2)).
inline double gain_bound_consensus(double kappa, int num_agents, double theta_hi,
                                   double theta_lo, double lambda2) {
  detail::check_gain_args(kappa, num_agents, theta_hi, theta_lo, lambda2);
  return kappa * std::sqrt(num_agents * theta_hi / (theta_lo * lambda2));
}

// Relaxed heterogeneity-based bound: alpha > m * varpi * a_bar * theta_hi / lambda2.
inline double gain_bound_relaxed(int num_edges, double varpi, double a_bar,
                                 double theta_hi, double lambda2) {
  require(num_edges >= 1, ErrorCode::invalid_config, "edge count must be positive");
  require(varpi >= 0.0, ErrorCode::invalid_config, "varpi must be nonnegative");
  require(a_bar > 0.0, ErrorCode::invalid_config, "max edge weight must be positive");
  require(theta_hi > 0.0, ErrorCode::invalid_config, "theta_hi must be positive");
  require(lambda2 > 0.0, ErrorCode::invalid_config,
          "spectral gap lambda2 must be positive");
  return num_edges * varpi * a_bar * theta_hi / lambda2;
}

// Dual flow bound, composed from the consensus bound with the dual drift
// rate kappa/theta_lo + delta (the identity the tests pin down).
inline double gain_bound_dorap(double kappa, double delta, double theta_lo,
                               double theta_hi, int num_agents, double lambda2) {
  require(delta >= 0.0, ErrorCode::invalid_config, "delta must be nonnegative");
  require(theta_lo > 0.0, ErrorCode::invalid_config, "theta_lo must be positive");
  return gain_bound_consensus(kappa / theta_lo + delta, num_agents, theta_hi,
                              theta_lo, lambda2);
}

// Sampled estimate of the drift-heterogeneity constant: the max over drawn
// (x, t) and agent pairs of || H_i^{-1} g_i - H_j^{-1} g_j ||_1 where g is the
// gradient's time partial, both agents evaluated at the common sample point.
inline double estimate_varpi(const std::vector<ModelPtr>& models, const Vec& x_low,
                             const Vec& x_high, double t_max, int num_samples,
                             std::uint64_t seed) {
  require(models.size() >= 2, ErrorCode::invalid_config,
          "varpi estimate needs at least two agents");
  require(num_samples >= 1, ErrorCode::invalid_config,
          "varpi estimate needs at least one sample");
  const int n = models.front()->dimension();
  require(x_low.size() == n && x_high.size() == n, ErrorCode::invalid_config,
          "varpi sampling box dimension mismatch");
  SplitMix64 rng(SplitMix64::mix(seed, 0x7661727069ull));
  double worst = 0.0;
  Vec x(n);
  for (int s = 0; s < num_samples; ++s) {
    for (int c = 0; c < n; ++c)
      x(c) = x_low(c) + (x_high(c) - x_low(c)) * rng.next_double();
    const double t = t_max * rng.next_double();
    std::vector<Vec> rates(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
      const Mat h = models[i]->hessian(x, t);
      rates[i] = h.llt().solve(models[i]->grad_time_partial(x, t));
    }
    for (std::size_t i = 0; i < models.size(); ++i)
      for (std::size_t j = i + 1; j < models.size(); ++j)
        worst = std::max(worst, (rates[i] - rates[j]).lpNorm<1>());
  }
  return worst;
}

}  // namespace ftdo
