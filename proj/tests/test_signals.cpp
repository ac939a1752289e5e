#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ftdo/time_signal.hpp"

using ftdo::TimeSignal;

TEST_CASE("factory values are exact", "[signals]") {
  SECTION("constant") {
    const TimeSignal s = TimeSignal::constant(3.0);
    CHECK(s.value(0.0) == 3.0);
    CHECK(s.value(7.0) == 3.0);
    CHECK(s.derivative(2.0) == 0.0);
    CHECK(s.second_derivative(2.0) == 0.0);
    CHECK(s.is_static());
    CHECK(s.derivative_bound() == 0.0);
  }
  SECTION("linear") {
    const TimeSignal s = TimeSignal::linear(2.0, 1.0);
    CHECK(s.value(3.0) == 7.0);
    CHECK(s.derivative(3.0) == 2.0);
    CHECK(s.second_derivative(3.0) == 0.0);
    CHECK_FALSE(s.is_static());
    CHECK(s.derivative_bound() == 2.0);
    CHECK(s.slope() == 2.0);
    CHECK(s.constant_term() == 1.0);
  }
  SECTION("sine") {
    const TimeSignal s = TimeSignal::sine(2.0, 3.0);
    CHECK(s.value(0.0) == 0.0);
    CHECK(s.derivative(0.0) == 6.0);  // amplitude * frequency at phase 0
    CHECK(s.second_derivative(0.0) == 0.0);
    CHECK_FALSE(s.is_static());
    CHECK(s.derivative_bound() == 6.0);
    REQUIRE(s.sinusoids().size() == 1);
    CHECK(s.sinusoids()[0].amplitude == 2.0);
    CHECK(s.sinusoids()[0].frequency == 3.0);
    CHECK(s.sinusoids()[0].phase == 0.0);
  }
  SECTION("phase shifts the argument") {
    const TimeSignal s = TimeSignal::sine(1.0, 1.0, std::numbers::pi / 2.0);
    CHECK(s.value(0.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(s.derivative(0.0) == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("shift and add compose in place", "[signals]") {
  TimeSignal s = TimeSignal::sine(1.0, 1.0);
  s.shift(5.0);
  CHECK(s.value(0.0) == 5.0);
  CHECK(s.constant_term() == 5.0);
  s.add({0.5, 2.0, 0.0});
  CHECK(s.value(0.0) == 5.0);
  CHECK(s.derivative(0.0) == Catch::Approx(1.0 + 0.5 * 2.0).margin(1e-15));
  CHECK(s.derivative_bound() == Catch::Approx(1.0 + 1.0).margin(1e-15));
  CHECK_FALSE(s.is_static());
}

TEST_CASE("derivatives agree with finite differences", "[signals]") {
  TimeSignal s = TimeSignal::linear(0.3, -1.0);
  s.add({2.0, 1.5, 0.4});
  s.add({-0.7, 3.1, 1.0});
  const double eps = 1e-6;
  for (const double t : {0.0, 0.37, 1.9, 4.2, 9.5}) {
    const double fd1 = (s.value(t + eps) - s.value(t - eps)) / (2.0 * eps);
    const double fd2 = (s.derivative(t + eps) - s.derivative(t - eps)) / (2.0 * eps);
    CHECK(s.derivative(t) == Catch::Approx(fd1).margin(1e-5));
    CHECK(s.second_derivative(t) == Catch::Approx(fd2).margin(1e-5));
  }
}

TEST_CASE("derivative bound dominates the sampled derivative", "[signals]") {
  TimeSignal s = TimeSignal::linear(-0.8, 2.0);
  s.add({1.3, 2.7, 0.2});
  s.add({0.4, 5.0, 1.1});
  const double bound = s.derivative_bound();
  for (int k = 0; k <= 200; ++k) {
    const double t = 10.0 * static_cast<double>(k) / 200.0;
    CHECK(std::abs(s.derivative(t)) <= bound + 1e-12);
  }
}
