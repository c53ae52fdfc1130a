#include <doctest.h>

#include <cmath>
#include <vector>

#include "snake/integrate.hpp"

using namespace snake;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

constexpr auto no_post = [](double, VecXd&) { return false; };

}  // namespace

TEST_SUITE_BEGIN("integrate");

TEST_CASE("exponential decay against the closed form") {
  VecXd y(1);
  y[0] = 1.0;
  const auto samples = linspace(0, 2, 21);
  std::vector<double> got_t, got_y;
  const auto stats = integrate_dopri5(
      [](double, const VecXd& s, VecXd& dy) { dy[0] = -s[0]; }, y, 0.0, 2.0,
      1e-9, 1e-12, 0.5, samples,
      [&](double t, const VecXd& s) {
        got_t.push_back(t);
        got_y.push_back(s[0]);
      },
      no_post);
  CHECK(stats.accepted > 0);
  REQUIRE(got_t.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(got_t[i] == samples[i]);
    CHECK(got_y[i] == doctest::Approx(std::exp(-samples[i])).epsilon(1e-8));
  }
  CHECK(y[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("harmonic oscillator returns to its start after a period") {
  VecXd y(2);
  y << 1.0, 0.0;
  integrate_dopri5(
      [](double, const VecXd& s, VecXd& dy) {
        dy[0] = s[1];
        dy[1] = -s[0];
      },
      y, 0.0, 2 * kPi, 1e-10, 1e-12, 0.0, {},
      [](double, const VecXd&) {}, no_post);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(y[1]) < 1e-8);
}

TEST_CASE("samples land exactly even when irregular") {
  VecXd y(1);
  y[0] = 0.0;
  const std::vector<double> samples{0.0, 0.013, 0.014, 0.5, 0.500001, 1.0};
  std::vector<double> hit;
  integrate_dopri5(
      [](double t, const VecXd&, VecXd& dy) { dy[0] = std::cos(t); }, y, 0.0,
      1.0, 1e-8, 1e-10, 0.0, samples,
      [&](double t, const VecXd& s) {
        hit.push_back(t);
        CHECK(s[0] == doctest::Approx(std::sin(t)).epsilon(1e-7));
      },
      no_post);
  CHECK(hit == samples);
}

TEST_CASE("max step bound is honored") {
  VecXd y(1);
  y[0] = 0.0;
  const auto stats = integrate_dopri5(
      [](double, const VecXd&, VecXd& dy) { dy[0] = 1.0; }, y, 0.0, 1.0, 1e-6,
      1e-9, 0.01, {}, [](double, const VecXd&) {}, no_post);
  CHECK(stats.accepted >= 100);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("post-step mutation keeps the solution on its manifold") {
  // Circular motion with a projection back onto the unit circle after every
  // step; the stepper must refresh its cached stage when state is edited.
  VecXd y(2);
  y << 1.0, 0.0;
  const auto samples = linspace(0, 10, 101);
  double worst = 0;
  integrate_dopri5(
      [](double, const VecXd& s, VecXd& dy) {
        dy[0] = -s[1];
        dy[1] = s[0];
      },
      y, 0.0, 10.0, 1e-6, 1e-9, 0.0, samples,
      [&](double, const VecXd& s) {
        worst = std::max(worst, std::abs(s.norm() - 1.0));
      },
      [](double, VecXd& s) {
        s /= s.norm();
        return true;
      });
  CHECK(worst < 1e-12);
  CHECK(y[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-6));
  CHECK(y[1] == doctest::Approx(std::sin(10.0)).epsilon(1e-6));
}

TEST_CASE("unmeetable tolerances raise a step-size collapse") {
  VecXd y(1);
  y[0] = 1.0;
  CHECK_THROWS_AS(
      integrate_dopri5(
          [](double, const VecXd&, VecXd& dy) {
            dy[0] = std::numeric_limits<double>::quiet_NaN();
          },
          y, 0.0, 1.0, 1e-6, 1e-9, 0.0, {}, [](double, const VecXd&) {},
          no_post),
      StepSizeCollapse);
}

TEST_CASE("tight tolerances tighten the answer") {
  auto run = [](double rtol) {
    VecXd y(2);
    y << 1.0, 0.0;
    integrate_dopri5(
        [](double, const VecXd& s, VecXd& dy) {
          dy[0] = s[1];
          dy[1] = -std::sin(s[0]) - 0.1 * s[1];
        },
        y, 0.0, 5.0, rtol, rtol * 1e-2, 0.0, {}, [](double, const VecXd&) {},
        no_post);
    return y[0];
  };
  const double coarse = run(1e-5);
  const double fine = run(1e-10);
  const double finer = run(1e-12);
  CHECK(std::abs(fine - finer) < std::abs(coarse - finer) + 1e-14);
  CHECK(std::abs(fine - finer) < 1e-8);
}

TEST_SUITE_END();
