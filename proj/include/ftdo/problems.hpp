#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/graph.hpp"
#include "ftdo/time_signal.hpp"

namespace ftdo {

// Time-varying cost surface used by every flow.  Implementations must be
// immutable and evaluation pure: twice differentiable in x, once in t, with
// curvature bounds 0 < theta_lo <= H(x,t) <= theta_hi declared exactly.
// kappa, when declared, bounds the gradient's time derivative on the model's
// documented domain.
class TVCostModel {
 public:
  virtual ~TVCostModel() = default;

  virtual int dimension() const = 0;
  virtual double value(const Vec& x, double t) const = 0;
  virtual Vec gradient(const Vec& x, double t) const = 0;
  virtual Mat hessian(const Vec& x, double t) const = 0;
  // Partial derivative of the gradient with respect to time, exact.
  virtual Vec grad_time_partial(const Vec& x, double t) const = 0;

  virtual double theta_lo() const = 0;
  virtual double theta_hi() const = 0;
  virtual std::optional<double> kappa() const { return std::nullopt; }

  // Closed-form inverse of the gradient map (x such that grad f(x,t) = lam),
  // when the family admits one.
  virtual std::optional<Vec> gradient_inverse(const Vec& lam, double t) const {
    return std::nullopt;
  }
};

using ModelPtr = std::shared_ptr<const TVCostModel>;

struct SurfaceEval {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
  Vec time_partial;
};

// Evaluates all four surfaces at (x, t); non-finite results are an error
// echoing the offending point.
inline SurfaceEval eval_surfaces(const TVCostModel& model, const Vec& x, double t) {
  require(x.size() == model.dimension(), ErrorCode::invalid_config,
          "state dimension mismatch in cost evaluation");
  SurfaceEval out;
  out.value = model.value(x, t);
  out.gradient = model.gradient(x, t);
  out.hessian = model.hessian(x, t);
  out.time_partial = model.grad_time_partial(x, t);
  const bool finite = std::isfinite(out.value) && out.gradient.allFinite() &&
                      out.hessian.allFinite() && out.time_partial.allFinite();
  if (!finite) {
    std::string point = "[";
    for (int c = 0; c < x.size(); ++c)
      point += (c ? "," : "") + std::to_string(x(c));
    point += "]";
    fail(ErrorCode::numeric_failure,
         "non-finite cost evaluation at x=" + point + ", t=" + std::to_string(t));
  }
  return out;
}

// Quadratic family with time-varying affine drift.  Two parameterizations,
// both with diagonal, time-invariant Hessians:
//   quadratic:       f(x,t) = 1/2 sum_c curv_c x_c^2 + sum_c b_c(t) x_c + c(t)
//   squared_affine:  f(x,t) = 1/2 sum_c (a_c x_c + b_c(t))^2
class AffineDriftQuadratic final : public TVCostModel {
 public:
  static AffineDriftQuadratic quadratic(Vec curvature, std::vector<TimeSignal> drift,
                                        TimeSignal offset = {}) {
    AffineDriftQuadratic m;
    m.squared_ = false;
    m.coeff_ = std::move(curvature);
    m.drift_ = std::move(drift);
    m.offset_ = std::move(offset);
    m.finish_init();
    return m;
  }

  static AffineDriftQuadratic squared_affine(Vec affine_coeff,
                                             std::vector<TimeSignal> drift) {
    AffineDriftQuadratic m;
    m.squared_ = true;
    m.coeff_ = std::move(affine_coeff);
    m.drift_ = std::move(drift);
    m.finish_init();
    return m;
  }

  int dimension() const override { return static_cast<int>(coeff_.size()); }

  double value(const Vec& x, double t) const override {
    double v = 0.0;
    if (squared_) {
      for (int c = 0; c < x.size(); ++c) {
        const double r = coeff_(c) * x(c) + drift_[c].value(t);
        v += 0.5 * r * r;
      }
    } else {
      for (int c = 0; c < x.size(); ++c)
        v += 0.5 * coeff_(c) * x(c) * x(c) + drift_[c].value(t) * x(c);
      v += offset_.value(t);
    }
    return v;
  }

  Vec gradient(const Vec& x, double t) const override {
    Vec g(x.size());
    for (int c = 0; c < x.size(); ++c) {
      g(c) = squared_ ? coeff_(c) * (coeff_(c) * x(c) + drift_[c].value(t))
                      : coeff_(c) * x(c) + drift_[c].value(t);
    }
    return g;
  }

  Mat hessian(const Vec& x, double t) const override {
    (void)t;
    Vec diag(coeff_.size());
    for (int c = 0; c < coeff_.size(); ++c)
      diag(c) = squared_ ? coeff_(c) * coeff_(c) : coeff_(c);
    (void)x;
    return diag.asDiagonal();
  }

  Vec grad_time_partial(const Vec& x, double t) const override {
    (void)x;
    Vec tp(coeff_.size());
    for (int c = 0; c < coeff_.size(); ++c) {
      tp(c) = squared_ ? coeff_(c) * drift_[c].derivative(t)
                       : drift_[c].derivative(t);
    }
    return tp;
  }

  double theta_lo() const override { return theta_lo_; }
  double theta_hi() const override { return theta_hi_; }

  std::optional<double> kappa() const override { return kappa_; }

  std::optional<Vec> gradient_inverse(const Vec& lam, double t) const override {
    Vec x(coeff_.size());
    for (int c = 0; c < coeff_.size(); ++c) {
      x(c) = squared_
                 ? (lam(c) / coeff_(c) - drift_[c].value(t)) / coeff_(c)
                 : (lam(c) - drift_[c].value(t)) / coeff_(c);
    }
    return x;
  }

  bool is_squared_affine() const { return squared_; }
  const Vec& coefficients() const { return coeff_; }
  const std::vector<TimeSignal>& drift_signals() const { return drift_; }
  const TimeSignal& offset_signal() const { return offset_; }

 private:
  void finish_init() {
    require(coeff_.size() >= 1, ErrorCode::invalid_config,
            "quadratic model needs at least one component");
    require(static_cast<int>(drift_.size()) == coeff_.size(),
            ErrorCode::invalid_config,
            "quadratic model needs one drift signal per component");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double kappa_sq = 0.0;
    for (int c = 0; c < coeff_.size(); ++c) {
      require(std::isfinite(coeff_(c)), ErrorCode::invalid_config,
              "non-finite quadratic coefficient");
      const double curv = squared_ ? coeff_(c) * coeff_(c) : coeff_(c);
      require(curv > 0.0, ErrorCode::invalid_config,
              "quadratic curvature must be positive in every component");
      lo = std::min(lo, curv);
      hi = std::max(hi, curv);
      const double rate = squared_ ? std::abs(coeff_(c)) * drift_[c].derivative_bound()
                                   : drift_[c].derivative_bound();
      kappa_sq += rate * rate;
    }
    theta_lo_ = lo;
    theta_hi_ = hi;
    kappa_ = std::sqrt(kappa_sq);
  }

  bool squared_ = false;
  Vec coeff_;
  std::vector<TimeSignal> drift_;
  TimeSignal offset_;
  double theta_lo_ = 0.0;
  double theta_hi_ = 0.0;
  double kappa_ = 0.0;
};

// Regularized logistic loss on a rotating data vector:
//   f(x,t) = log(1 + exp(-l * y(t)^T x)) + beta/2 ||x||^2,
//   y(t) = (1 + sin(w t)) * y0,  l in {-1, +1}.
// The gradient's time derivative is unbounded in ||x||, so kappa is declared
// over the ball ||x|| <= region_radius (documented; ample for trajectories
// that live near the optimizer).
class TVLogistic final : public TVCostModel {
 public:
  TVLogistic(int label, Vec y0, double w, double beta, double region_radius = 4.0)
      : label_(label), y0_(std::move(y0)), w_(w), beta_(beta), radius_(region_radius) {
    require(label_ == 1 || label_ == -1, ErrorCode::invalid_config,
            "logistic label must be +1 or -1");
    require(beta_ > 0.0, ErrorCode::invalid_config,
            "logistic regularizer must be positive");
    require(radius_ > 0.0, ErrorCode::invalid_config,
            "logistic kappa region radius must be positive");
  }

  int dimension() const override { return static_cast<int>(y0_.size()); }

  double value(const Vec& x, double t) const override {
    const double s = -label_ * data_vector(t).dot(x);
    return softplus(s) + 0.5 * beta_ * x.squaredNorm();
  }

  Vec gradient(const Vec& x, double t) const override {
    const Vec y = data_vector(t);
    const double s = -label_ * y.dot(x);
    return -label_ * sigmoid(s) * y + beta_ * x;
  }

  Mat hessian(const Vec& x, double t) const override {
    const Vec y = data_vector(t);
    const double s = -label_ * y.dot(x);
    const double sig = sigmoid(s);
    Mat h = sig * (1.0 - sig) * (y * y.transpose());
    h.diagonal().array() += beta_;
    return h;
  }

  Vec grad_time_partial(const Vec& x, double t) const override {
    const Vec y = data_vector(t);
    const Vec ydot = w_ * std::cos(w_ * t) * y0_;
    const double s = -label_ * y.dot(x);
    const double sig = sigmoid(s);
    return sig * (1.0 - sig) * ydot.dot(x) * y - label_ * sig * ydot;
  }

  double theta_lo() const override { return beta_; }
  // sup sigma' = 1/4 and ||y(t)||^2 <= 4 ||y0||^2.
  double theta_hi() const override { return beta_ + y0_.squaredNorm(); }

  std::optional<double> kappa() const override {
    const double ynorm = y0_.norm();
    return w_ * ynorm * (1.0 + 0.5 * radius_ * ynorm);
  }

  int label() const { return label_; }
  const Vec& y0() const { return y0_; }
  double rotation_rate() const { return w_; }
  double beta() const { return beta_; }
  double region_radius() const { return radius_; }
  Vec data_vector(double t) const { return (1.0 + std::sin(w_ * t)) * y0_; }

 private:
  static double sigmoid(double s) {
    return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s))
                    : std::exp(s) / (1.0 + std::exp(s));
  }
  static double softplus(double s) {
    return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }

  int label_;
  Vec y0_;
  double w_;
  double beta_;
  double radius_;
};

// Per-agent resource demand d_i(t) with exact rate and a declared bound on
// ||d_i'(t)||.
class ResourceProfile {
 public:
  ResourceProfile() = default;
  explicit ResourceProfile(std::vector<TimeSignal> demand) : demand_(std::move(demand)) {
    require(!demand_.empty(), ErrorCode::invalid_config,
            "resource profile needs at least one component");
  }

  int dimension() const { return static_cast<int>(demand_.size()); }

  Vec demand(double t) const {
    Vec d(dimension());
    for (int c = 0; c < d.size(); ++c) d(c) = demand_[c].value(t);
    return d;
  }

  Vec demand_rate(double t) const {
    Vec d(dimension());
    for (int c = 0; c < d.size(); ++c) d(c) = demand_[c].derivative(t);
    return d;
  }

  // Bound on ||d'(t)||_2, exact for single-term components.
  double delta_bound() const {
    double sq = 0.0;
    for (const auto& s : demand_) sq += s.derivative_bound() * s.derivative_bound();
    return std::sqrt(sq);
  }

  const std::vector<TimeSignal>& signals() const { return demand_; }

 private:
  std::vector<TimeSignal> demand_;
};

struct ConjugateOptions {
  double tol = 1e-12;   // on ||grad f(x,t) - lam||
  int max_iter = 100;
};

// Solves sup_x { lam^T x - f(x,t) }, i.e. grad f(x,t) = lam, for a strongly
// convex model.  Families with a closed-form inverse gradient use it; the
// general path is damped Newton with Armijo backtracking on the conjugate
// objective.
inline Vec conjugate_argmax(const TVCostModel& model, const Vec& lam, double t,
                            const ConjugateOptions& opts = {},
                            const Vec* warm_start = nullptr) {
  require(lam.size() == model.dimension(), ErrorCode::invalid_config,
          "multiplier dimension mismatch in conjugate map");
  if (auto closed = model.gradient_inverse(lam, t)) return *closed;

  Vec x = warm_start ? *warm_start : Vec::Zero(model.dimension());
  // Minimize psi(x) = f(x,t) - lam^T x; grad psi = grad f - lam.
  const auto psi = [&](const Vec& p) { return model.value(p, t) - lam.dot(p); };
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Vec g = model.gradient(x, t) - lam;
    if (g.norm() <= opts.tol) return x;
    const Mat h = model.hessian(x, t);
    const Vec step = h.llt().solve(g);
    const double slope = -g.dot(step);
    const double base = psi(x);
    // Once the predicted decrease drowns in the rounding of psi, the line
    // search cannot certify progress; the iterate is already in the Newton
    // basin, so take the full step.
    if (-slope <= 1e-14 * (1.0 + std::abs(base))) {
      x -= step;
      continue;
    }
    double alpha = 1.0;
    Vec candidate = x - alpha * step;
    int backtracks = 0;
    while (psi(candidate) > base + 1e-4 * alpha * slope && backtracks < 60) {
      alpha *= 0.5;
      candidate = x - alpha * step;
      ++backtracks;
    }
    x = candidate;
  }
  if ((model.gradient(x, t) - lam).norm() <= opts.tol) return x;
  fail(ErrorCode::numeric_failure,
       "conjugate argmax did not reach tolerance at t=" + std::to_string(t));
}

struct DualSurfaces {
  Vec x_star;             // conjugate argmax at (lam, t)
  Vec dual_grad;          // d(t) - x_star
  Vec dual_time_partial;  // d'(t) + H(x_star,t)^{-1} * time-partial of grad f
};

// Dual surfaces for the resource-allocation flow.  The identity
//   d/dt [grad of the dual local objective] = d'(t) + H^{-1} d/dt grad f
// is evaluated with exact signal derivatives.
inline DualSurfaces dual_surfaces(const TVCostModel& model, const ResourceProfile& profile,
                                  const Vec& lam, double t,
                                  const ConjugateOptions& opts = {},
                                  const Vec* warm_start = nullptr) {
  require(profile.dimension() == model.dimension(), ErrorCode::invalid_config,
          "resource profile dimension mismatch");
  DualSurfaces out;
  out.x_star = conjugate_argmax(model, lam, t, opts, warm_start);
  out.dual_grad = profile.demand(t) - out.x_star;
  const Mat h = model.hessian(out.x_star, t);
  out.dual_time_partial =
      profile.demand_rate(t) + h.llt().solve(model.grad_time_partial(out.x_star, t));
  return out;
}

}  // namespace ftdo
