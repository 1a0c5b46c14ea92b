#include <gtest/gtest.h>

#include <cmath>

#include "subrad/schedule.hpp"

using namespace subrad;

namespace {

Schedule two_seed_schedule(double eta) {
  const double starts[] = {0.0, 0.6e-3};
  return seeded_schedule(1.8, 0.0, 0.6e-3, eta, starts, 100e-6, 1.2e-3);
}

}  // namespace

TEST(ControlsAt, SeededProtocol) {
  const double eta = 5.0e6;
  const auto s = two_seed_schedule(eta);
  auto c = s.controls_at(50e-6);
  EXPECT_EQ(c.eps, 1.8);
  EXPECT_EQ(c.eta, eta);
  c = s.controls_at(0.3e-3);
  EXPECT_EQ(c.eps, 1.8);
  EXPECT_EQ(c.eta, 0.0);
  c = s.controls_at(0.7e-3 - 1e-9);
  EXPECT_EQ(c.eps, 0.0);
  EXPECT_EQ(c.eta, eta);
}

TEST(ControlsAt, RightContinuousAtBreakpoints) {
  const auto s = two_seed_schedule(1.0);
  auto c = s.controls_at(0.6e-3);
  EXPECT_EQ(c.eps, 0.0);  // eps switched exactly where the second pulse starts
  EXPECT_EQ(c.eta, 1.0);
  c = s.controls_at(100e-6);
  EXPECT_EQ(c.eta, 0.0);
  EXPECT_EQ(s.controls_at(1.2e-3).eps, 0.0);
}

TEST(ControlsAt, ConstantRelaxation) {
  const auto s = constant_schedule(0.6, 2e-3);
  for (double t : {0.0, 0.5e-3, 1.37e-3, 2e-3}) {
    const auto c = s.controls_at(t);
    EXPECT_EQ(c.eps, 0.6);
    EXPECT_EQ(c.eta, 0.0);
  }
}

TEST(ControlsAt, OutsideCoverageThrows) {
  const auto s = constant_schedule(0.6, 2e-3);
  EXPECT_THROW(s.controls_at(-1e-9), std::out_of_range);
  EXPECT_THROW(s.controls_at(2.1e-3), std::out_of_range);
}

TEST(Schedule, Breakpoints) {
  const auto s = two_seed_schedule(1.0);
  EXPECT_EQ(s.breakpoints(), (std::vector<double>{100e-6, 0.6e-3, 0.6e-3 + 100e-6}));
  EXPECT_TRUE(constant_schedule(0.6, 1e-3).breakpoints().empty());
  const auto w = s.seed_windows();
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].first, 0.6e-3);
}

TEST(Schedule, RejectsOverlapGapAndNegativeValues) {
  const std::vector<Segment> eta{{0.0, 1.0, 0.0}};
  EXPECT_THROW(Schedule({{0.0, 0.5, 1.0}, {0.4, 1.0, 0.0}}, eta), std::invalid_argument);
  EXPECT_THROW(Schedule({{0.0, 0.5, 1.0}, {0.6, 1.0, 0.0}}, eta), std::invalid_argument);
  EXPECT_THROW(Schedule({{0.0, 1.0, -0.1}}, eta), std::invalid_argument);
  EXPECT_THROW(Schedule({{0.1, 1.0, 0.1}}, eta), std::invalid_argument);
  EXPECT_THROW(Schedule({{0.0, 0.9, 0.1}}, eta), std::invalid_argument);
  EXPECT_NO_THROW(Schedule({{0.0, 0.5, 1.0}, {0.5, 1.0, 0.0}}, eta));
}

TEST(AtomNumber, ExponentialDecay) {
  ModelParams p;
  EXPECT_EQ(atom_number(p, 0.0), 250000.0);
  EXPECT_EQ(atom_number(p, 1e-3), 250000.0 / std::exp(1.0));
  EXPECT_NEAR(atom_number(p, 1e-3), 91970.0, 0.5);
  p.tau_loss = INFINITY;
  EXPECT_EQ(atom_number(p, 5e-3), p.N0);
}

TEST(InitialState, Pure) {
  const auto m = initial_state({InitialKind::pure, -1.0, 1}, -5, 5, 250000.0);
  for (int n = -5; n <= 5; ++n) EXPECT_EQ(m[n], n == 0 ? cplx(1.0) : cplx(0.0));
}

TEST(InitialState, ZeroNoiseEqualsPure) {
  const auto pure = initial_state({InitialKind::pure, -1.0, 1}, -5, 5, 250000.0);
  const auto noise = initial_state({InitialKind::noise, 0.0, 99}, -5, 5, 250000.0);
  EXPECT_EQ(pure, noise);
}

TEST(InitialState, HalfQuantumSeed) {
  const double N0 = 250000.0;
  const auto m = initial_state({InitialKind::noise, -1.0, 42}, -5, 5, N0);
  // 1/(2 N0) = 2e-6 before renormalization
  const double before = 1.0 / (2.0 * N0);
  EXPECT_NEAR(std::norm(m[1]), before / (1.0 + before), 1e-18);
  EXPECT_NEAR(std::norm(m[1]) * (1.0 + before), 2e-6, 1e-18);
  EXPECT_NEAR(m.norm_squared(), 1.0, 1e-15);
}

TEST(InitialState, AlwaysNormalized) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (double amp : {0.0, 1e-4, 0.03, 0.5, 2.0}) {
      const auto m = initial_state({InitialKind::noise, amp, seed}, -5, 5, 250000.0);
      EXPECT_NEAR(m.norm_squared(), 1.0, 1e-15);
    }
}

TEST(InitialState, SeedDeterminesPhase) {
  const InitialStateSpec a{InitialKind::noise, 0.01, 7};
  const InitialStateSpec b{InitialKind::noise, 0.01, 8};
  EXPECT_EQ(initial_state(a, -5, 5, 1e5), initial_state(a, -5, 5, 1e5));
  EXPECT_NE(std::arg(initial_state(a, -5, 5, 1e5)[1]),
            std::arg(initial_state(b, -5, 5, 1e5)[1]));
}

TEST(NoisePhase, UniformRange) {
  double lo = 10.0, hi = -1.0, mean = 0.0;
  const int n = 2000;
  for (int s = 0; s < n; ++s) {
    const double ph = noise_phase(static_cast<std::uint64_t>(s));
    lo = std::min(lo, ph);
    hi = std::max(hi, ph);
    mean += ph / n;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, two_pi);
  EXPECT_NEAR(mean, std::numbers::pi, 0.15);
}

TEST(InitialState, WindowMustContainZero) {
  EXPECT_THROW(initial_state({}, 1, 3, 1.0), std::invalid_argument);
}
