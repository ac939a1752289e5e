#pragma once

#include <cmath>
#include <vector>

#include "ftdo/errors.hpp"

namespace ftdo {

struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

// Closed-form scalar signal
//   s(t) = c0 + c1*t + sum_k amp_k * sin(freq_k * t + phase_k).
// Values and derivatives are exact, which keeps the time-partial terms fed to
// the flows free of finite-difference error.  The grammar covers every signal
// used by the builtin scenarios (constants, ramps, sines, phase-shifted sines).
class TimeSignal {
 public:
  TimeSignal() = default;

  static TimeSignal constant(double c) {
    TimeSignal s;
    s.constant_ = c;
    return s;
  }

  static TimeSignal linear(double slope, double intercept = 0.0) {
    TimeSignal s;
    s.constant_ = intercept;
    s.slope_ = slope;
    return s;
  }

  static TimeSignal sine(double amplitude, double frequency, double phase = 0.0) {
    TimeSignal s;
    s.sinusoids_.push_back({amplitude, frequency, phase});
    return s;
  }

  TimeSignal& add(const Sinusoid& term) {
    sinusoids_.push_back(term);
    return *this;
  }

  TimeSignal& shift(double c) {
    constant_ += c;
    return *this;
  }

  double value(double t) const {
    double v = constant_ + slope_ * t;
    for (const auto& s : sinusoids_) v += s.amplitude * std::sin(s.frequency * t + s.phase);
    return v;
  }

  double derivative(double t) const {
    double v = slope_;
    for (const auto& s : sinusoids_) v += s.amplitude * s.frequency * std::cos(s.frequency * t + s.phase);
    return v;
  }

  double second_derivative(double t) const {
    double v = 0.0;
    for (const auto& s : sinusoids_) v -= s.amplitude * s.frequency * s.frequency * std::sin(s.frequency * t + s.phase);
    return v;
  }

  // Upper bound on |derivative| over all t; tight for single-term signals.
  double derivative_bound() const {
    double v = std::abs(slope_);
    for (const auto& s : sinusoids_) v += std::abs(s.amplitude * s.frequency);
    return v;
  }

  bool is_static() const { return slope_ == 0.0 && sinusoids_.empty(); }

  double constant_term() const { return constant_; }
  double slope() const { return slope_; }
  const std::vector<Sinusoid>& sinusoids() const { return sinusoids_; }

 private:
  double constant_ = 0.0;
  double slope_ = 0.0;
  std::vector<Sinusoid> sinusoids_;
};

}  // namespace ftdo
