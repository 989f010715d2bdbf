#include <gtest/gtest.h>

#include <random>

#include "rrcal/error.hpp"
#include "rrcal/identifiability.hpp"
#include "rrcal/simulator.hpp"

namespace rrcal {
namespace {

ExcitationReport report_for(TrajectoryKind kind, double duration = 15.0) {
  TrajectoryProfile p;
  p.kind = kind;
  p.duration = duration;
  const GroundTruth truth = generate_trajectory(p);
  return excitation_report(simulate_pairs(truth, {}), truth.extrinsics());
}

TEST(ObservabilityDet, Examples) {
  EXPECT_EQ(observability_det({{0.3, -2.0}, 1.0, 0.0, 0.4}), 0.0);
  EXPECT_NEAR(observability_det({Vec2{2.0, 2.0 * std::tan(0.7)}, 1.0, 3.0, 0.7}), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(observability_det({{0.0, 1.0}, 0.0, 2.0, 0.0})), 2.0, 1e-15);
}

TEST(ObservabilityDet, BilinearAndAxisInvariant) {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const ExcitationSample s{{u(rng), u(rng)}, u(rng), u(rng), u(rng)};
    const double d = observability_det(s);
    const double c = u(rng);
    ExcitationSample sa = s;
    sa.alpha_gamma *= c;
    EXPECT_NEAR(observability_det(sa), c * d, 1e-12);
    ExcitationSample sh = s;
    sh.h_a *= c;
    EXPECT_NEAR(observability_det(sh), c * d, 1e-12);
    ExcitationSample st = s;
    st.h_a += u(rng) * unit_vector(s.theta_t);
    EXPECT_NEAR(observability_det(st), d, 1e-12);
  }
}

TEST(FiniteDifference, CentralInsideOneSidedAtEnds) {
  const std::vector<double> t{0.0, 0.1, 0.3, 0.4};
  std::vector<double> quad;
  for (double x : t) quad.push_back(3.0 * x * x);
  const auto d = finite_difference(t, quad);
  EXPECT_NEAR(d[0], 3.0 * 0.1, 1e-12);           // forward difference
  EXPECT_NEAR(d[1], 3.0 * 0.3, 1e-12);           // (f(0.3) - f(0)) / 0.3
  EXPECT_NEAR(d[2], 3.0 * 0.5, 1e-12);
  EXPECT_NEAR(d[3], 3.0 * 0.7, 1e-12);           // backward difference
  EXPECT_THROW(finite_difference(std::vector<double>{0.0}, std::vector<double>{1.0}), Error);
}

TEST(ExcitationReport, ConstantOmega) {
  const ExcitationReport r = report_for(TrajectoryKind::kConstantOmega);
  EXPECT_EQ(r.fraction_degenerate, 1.0);
  EXPECT_TRUE(r.flags.zero_alpha);
}

TEST(ExcitationReport, PeriodicTrajectory) {
  for (double duration : {15.0, 120.0}) {
    const ExcitationReport r = report_for(TrajectoryKind::kPeriodicDefault, duration);
    EXPECT_LT(r.fraction_degenerate, 0.1);
    EXPECT_FALSE(r.flags.zero_alpha || r.flags.zero_velocity || r.flags.axis_aligned_motion);
    EXPECT_GT(r.min_abs_det, -1e-300);
    EXPECT_GE(r.mean_abs_det, r.min_abs_det);
  }
}

TEST(ExcitationReport, StraightLine) {
  const ExcitationReport r = report_for(TrajectoryKind::kStraightLine);
  EXPECT_EQ(r.fraction_degenerate, 1.0);
  EXPECT_TRUE(r.flags.zero_alpha);
  EXPECT_FALSE(r.flags.zero_velocity);
}

TEST(ExcitationReport, StationaryRaisesAllFlags) {
  std::vector<ExcitationSample> samples(20, ExcitationSample{Vec2::Zero(), 0.0, 0.0, 0.5});
  const ExcitationReport r = excitation_report(samples);
  EXPECT_EQ(r.fraction_degenerate, 1.0);
  EXPECT_TRUE(r.flags.zero_alpha);
  EXPECT_TRUE(r.flags.zero_velocity);
  EXPECT_TRUE(r.flags.axis_aligned_motion);
}

TEST(ExcitationReport, AxisAlignedMotion) {
  std::vector<ExcitationSample> samples;
  for (int j = 0; j < 20; ++j) samples.push_back({unit_vector(0.4) * (1.0 + 0.1 * j), 0.3, 0.5, 0.4});
  const ExcitationReport r = excitation_report(samples);
  EXPECT_EQ(r.fraction_degenerate, 1.0);
  EXPECT_TRUE(r.flags.axis_aligned_motion);
  EXPECT_FALSE(r.flags.zero_alpha);
}

TEST(ExcitationReport, FractionInUnitInterval) {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ExcitationSample> samples;
    for (int j = 0; j < 30; ++j) {
      samples.push_back({{u(rng), u(rng)}, u(rng), u(rng) > 0.3 ? u(rng) : 0.0, u(rng)});
    }
    const double f = excitation_report(samples).fraction_degenerate;
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(ExcitationReport, TooFewPairs) {
  TrajectoryProfile p;
  const GroundTruth truth = generate_trajectory(p);
  auto pairs = simulate_pairs(truth, {});
  pairs.resize(2);
  try {
    excitation_report(pairs, truth.extrinsics());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

}  // namespace
}  // namespace rrcal
