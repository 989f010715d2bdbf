#pragma once

#include <cstdint>
#include <vector>

#include "rrcal/ego_velocity.hpp"
#include "rrcal/solver.hpp"
#include "rrcal/types.hpp"

namespace rrcal {

struct Harmonic {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase = 0.0;
};

/// offset + sum amplitude * sin(2 pi f t + phase)
struct HarmonicSignal {
  double offset = 0.0;
  std::vector<Harmonic> terms;

  double value(double t) const;
  double derivative(double t) const;
};

struct RigGeometry {
  Vec2 translation{0.9, 1.2};  // m, radar b origin in radar a's frame
  double theta_ba = 1.2;       // rad
};

enum class TrajectoryKind { kPeriodicDefault, kConstantOmega, kStraightLine, kCustomHarmonics };

struct TrajectoryProfile {
  TrajectoryKind kind = TrajectoryKind::kPeriodicDefault;
  double duration = 15.0;  // s
  double rate = 20.0;      // Hz
  RigGeometry rig;
  /// Body-frame velocity of radar a for the constant kinds.
  Vec2 velocity{1.0, 0.3};
  /// Angular rate for kConstantOmega.
  double omega = 0.4;
  /// Channels for kCustomHarmonics.
  HarmonicSignal vx;
  HarmonicSignal vy;
  HarmonicSignal omega_signal;

  void validate() const;
};

/// Channels of the default periodic trajectory (15 s period).
struct PeriodicChannels {
  HarmonicSignal vx;
  HarmonicSignal vy;
  HarmonicSignal omega;
};
PeriodicChannels periodic_default_channels();

struct TruthSample {
  double t = 0.0;
  Vec2 v_a = Vec2::Zero();  // radar a frame
  double omega = 0.0;       // rad/s
  double alpha = 0.0;       // rad/s^2
};

struct GroundTruth {
  std::vector<TruthSample> samples;
  RigGeometry rig;

  /// Extrinsics in reporting form (theta_t in [0, pi)).
  Extrinsics extrinsics() const;
  /// omega_gamma = omega * omega_scale(): |t| with the sign of the reported axis.
  double omega_scale() const;
  MotionState motion(std::size_t j) const;
  RadarVelocityTruth radar_velocities(std::size_t j) const;
  std::vector<RadarVelocityTruth> radar_velocities() const;
};

struct NoiseSpec {
  double sigma_r = 0.0;  // m/s, ego-velocity noise per axis
  double outlier_fraction = 0.0;
  double detection_range_rate_sigma = 0.0;  // m/s
  std::uint64_t rng_seed = 0;

  void validate() const;
};

GroundTruth generate_trajectory(const TrajectoryProfile& profile);

/// h_a = v_a + n_a, h_b = R(theta_ba)(omega^ t + v_a) + n_b, covariances sigma_r^2 I.
std::vector<MeasurementPair> simulate_pairs(const GroundTruth& truth, const NoiseSpec& noise);

struct Pose2 {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// World poses of radar a, trapezoidal integration from the origin.
std::vector<Pose2> integrate_poses(const GroundTruth& truth);

struct LandmarkSpec {
  std::size_t count = 150;
  double margin = 5.0;   // m beyond the trajectory's extent
  double width = 40.0;   // m, annulus thickness
  std::uint64_t seed = 7;
};

/// Static landmarks uniform in an annulus enclosing the trajectory.
std::vector<Vec2> make_landmarks(const GroundTruth& truth, const LandmarkSpec& spec);

struct RadarModel {
  double half_fov = kPi / 3.0;  // rad about the boresight (azimuth 0, radar y-axis)
  double max_range = 250.0;     // m
};

struct ScanStreams {
  std::vector<RadarScan> a;
  std::vector<RadarScan> b;
  /// outlier labels per detection, parallel to the scans
  std::vector<std::vector<bool>> outliers_a;
  std::vector<std::vector<bool>> outliers_b;
};

/// Detection-level scans from a static landmark field. A fraction of detections
/// per scan gets its range-rate offset by 0.5 to 3 m/s (random sign).
ScanStreams simulate_scans(const GroundTruth& truth, std::span<const Vec2> landmarks,
                           const NoiseSpec& noise, const RadarModel& radar = {});

/// Seed of one trial in an experiment matrix.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial);

}  // namespace rrcal
