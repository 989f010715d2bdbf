#include <gtest/gtest.h>

#include "rrcal/calibration_model.hpp"
#include "rrcal/error.hpp"
#include "rrcal/identifiability.hpp"
#include "rrcal/simulator.hpp"

namespace rrcal {
namespace {

GroundTruth make(TrajectoryKind kind, double duration = 15.0) {
  TrajectoryProfile p;
  p.kind = kind;
  p.duration = duration;
  return generate_trajectory(p);
}

TEST(Trajectory, StraightLine) {
  const GroundTruth t = make(TrajectoryKind::kStraightLine);
  ASSERT_EQ(t.samples.size(), 300u);
  for (const auto& s : t.samples) {
    EXPECT_EQ(s.omega, 0.0);
    EXPECT_EQ(s.alpha, 0.0);
  }
}

TEST(Trajectory, ConstantOmega) {
  const GroundTruth t = make(TrajectoryKind::kConstantOmega);
  for (const auto& s : t.samples) {
    EXPECT_EQ(s.omega, 0.4);
    EXPECT_EQ(s.alpha, 0.0);
  }
}

TEST(Trajectory, PeriodicShape) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault, 30.0);
  for (std::size_t j = 0; j < t.samples.size(); ++j) {
    const double speed = t.samples[j].v_a.norm();
    EXPECT_GE(speed, 0.3);
    EXPECT_LE(speed, 2.0);
  }
  // alpha is the derivative of omega
  for (std::size_t j = 1; j + 1 < t.samples.size(); ++j) {
    const double fd = (t.samples[j + 1].omega - t.samples[j - 1].omega) /
                      (t.samples[j + 1].t - t.samples[j - 1].t);
    EXPECT_NEAR(fd, t.samples[j].alpha, 1e-3);
  }
  EXPECT_LT(excitation_report(simulate_pairs(t, {}), t.extrinsics()).fraction_degenerate, 0.1);
}

TEST(Trajectory, InvalidProfile) {
  TrajectoryProfile p;
  p.duration = 0.0;
  EXPECT_THROW(generate_trajectory(p), Error);
  p = {};
  p.rate = -1.0;
  EXPECT_THROW(generate_trajectory(p), Error);
  p = {};
  p.rig.translation.setZero();
  EXPECT_THROW(generate_trajectory(p), Error);
}

TEST(SimulatePairs, NoiseFreeSatisfiesModel) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault);
  const auto pairs = simulate_pairs(t, {});
  CalibState s;
  s.extrinsics = t.extrinsics();
  for (std::size_t j = 0; j < pairs.size(); ++j) s.motion.push_back(t.motion(j));
  EXPECT_LT(residuals(s, pairs).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SimulatePairs, NoiseLevel) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault, 300.0);
  NoiseSpec n;
  n.sigma_r = 0.1;
  n.rng_seed = 2;
  const auto pairs = simulate_pairs(t, n);
  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const Vec2 e = pairs[j].a.velocity - t.samples[j].v_a;
    sum2 += e.squaredNorm();
    count += 2;
    EXPECT_TRUE(pairs[j].a.covariance.isApprox(0.01 * Mat2::Identity(), 1e-14));
  }
  ASSERT_GE(count, 10000u);
  EXPECT_NEAR(std::sqrt(sum2 / count), 0.1, 0.005);
}

TEST(SimulatePairs, NoRotationHidesLeverArm) {
  const GroundTruth t = make(TrajectoryKind::kStraightLine);
  const auto pairs = simulate_pairs(t, {});
  for (const auto& p : pairs) {
    EXPECT_LT((p.b.velocity - rot2(t.rig.theta_ba) * p.a.velocity).norm(), 1e-12);
  }
}

TEST(SimulatePairs, ChiSquareAndTriangleBound) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault, 120.0);
  NoiseSpec n;
  n.sigma_r = 0.05;
  n.rng_seed = 3;
  const auto pairs = simulate_pairs(t, n);
  CalibState s;
  s.extrinsics = t.extrinsics();
  for (std::size_t j = 0; j < pairs.size(); ++j) s.motion.push_back(t.motion(j));
  const double cost = CalibrationProblem(pairs).cost(s);
  const double dof = 4.0 * static_cast<double>(pairs.size());
  // The covariance floor shrinks the expected value slightly.
  EXPECT_NEAR(cost / dof, 0.0025 / (0.0025 + kCovarianceFloor), 0.1);
  const double bound = 6.0 * 0.05 * std::sqrt(2.0) * (1.0 + 1.0);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const double lhs = (pairs[j].b.velocity - rot2(t.rig.theta_ba) * pairs[j].a.velocity).norm();
    EXPECT_LE(lhs, std::abs(t.samples[j].omega) * t.rig.translation.norm() + bound);
  }
}

TEST(SimulatePairs, Reproducible) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault);
  NoiseSpec n;
  n.sigma_r = 0.2;
  n.rng_seed = 77;
  EXPECT_EQ(simulate_pairs(t, n), simulate_pairs(t, n));
  NoiseSpec other = n;
  other.rng_seed = 78;
  EXPECT_NE(simulate_pairs(t, n), simulate_pairs(t, other));
}

TEST(SimulateScans, StationaryRig) {
  TrajectoryProfile p;
  p.kind = TrajectoryKind::kStraightLine;
  p.velocity.setZero();
  p.duration = 2.0;
  const GroundTruth t = generate_trajectory(p);
  const auto lm = make_landmarks(t, {});
  NoiseSpec n;
  n.detection_range_rate_sigma = 1e-3;
  const ScanStreams s = simulate_scans(t, lm, n);
  for (const auto& scan : s.a) {
    EXPECT_GE(scan.detections.size(), 3u);
    for (const auto& d : scan.detections) EXPECT_LT(std::abs(d.range_rate), 6e-3);
  }
}

TEST(SimulateScans, NoiseFreeScansRecoverTruth) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault);
  const ScanStreams s = simulate_scans(t, make_landmarks(t, {}), {});
  ASSERT_EQ(s.a.size(), t.samples.size());
  ASSERT_EQ(s.b.size(), t.samples.size());
  for (std::size_t j = 0; j < t.samples.size(); j += 7) {
    const RadarVelocityTruth v = t.radar_velocities(j);
    EXPECT_LT((ransac_ego_velocity(s.a[j], {}).velocity - v.v_a).norm(), 1e-9);
    EXPECT_LT((ransac_ego_velocity(s.b[j], {}).velocity - v.v_b).norm(), 1e-9);
  }
}

TEST(SimulateScans, OutliersRejected) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault, 5.0);
  NoiseSpec n;
  n.outlier_fraction = 0.3;
  n.detection_range_rate_sigma = 0.01;
  n.rng_seed = 12;
  const ScanStreams s = simulate_scans(t, make_landmarks(t, {}), n);
  std::size_t outliers = 0, rejected = 0;
  for (std::size_t j = 0; j < s.a.size(); ++j) {
    const RansacFit fit = ransac_fit(s.a[j], {});
    std::vector<bool> kept(s.a[j].detections.size(), false);
    for (std::size_t i : fit.inliers) kept[i] = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!s.outliers_a[j][i]) continue;
      ++outliers;
      if (!kept[i]) ++rejected;
    }
  }
  ASSERT_GT(outliers, 0u);
  EXPECT_GE(static_cast<double>(rejected), 0.95 * static_cast<double>(outliers));
}

TEST(SimulateScans, Reproducible) {
  const GroundTruth t = make(TrajectoryKind::kPeriodicDefault, 3.0);
  NoiseSpec n;
  n.outlier_fraction = 0.2;
  n.detection_range_rate_sigma = 0.05;
  n.rng_seed = 4;
  const auto lm = make_landmarks(t, {});
  const ScanStreams x = simulate_scans(t, lm, n);
  const ScanStreams y = simulate_scans(t, lm, n);
  EXPECT_EQ(x.a, y.a);
  EXPECT_EQ(x.b, y.b);
  EXPECT_EQ(x.outliers_a, y.outliers_a);
}

TEST(GroundTruth, OmegaScaleMatchesReportedAxis) {
  TrajectoryProfile p;
  p.rig.translation = {-1.0, -2.0};  // axis angle in (-pi, 0) gets wrapped by +pi
  const GroundTruth t = generate_trajectory(p);
  const Vec2 axis = unit_vector(t.extrinsics().theta_t);
  EXPECT_NEAR(std::abs(t.omega_scale()), std::sqrt(5.0), 1e-12);
  EXPECT_LT((axis * t.omega_scale() - t.rig.translation).norm(), 1e-12);
}

TEST(TrialSeed, Distinct) {
  EXPECT_NE(trial_seed(1, 0, 0), trial_seed(1, 0, 1));
  EXPECT_NE(trial_seed(1, 0, 1), trial_seed(1, 1, 0));
  EXPECT_EQ(trial_seed(1, 2, 3), trial_seed(1, 2, 3));
}

}  // namespace
}  // namespace rrcal
