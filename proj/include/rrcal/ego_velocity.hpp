#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rrcal/geometry.hpp"

namespace rrcal {

/// One radar return. Azimuth is measured from the radar's y-axis towards its
/// x-axis, so the line of sight is (sin(azimuth), cos(azimuth)).
struct Detection {
  double range = 0.0;       // m, > 0
  double azimuth = 0.0;     // rad
  double range_rate = 0.0;  // m/s, negative when closing

  bool operator==(const Detection&) const = default;
};

struct RadarScan {
  double timestamp = 0.0;
  std::string radar_id;
  std::vector<Detection> detections;

  bool operator==(const RadarScan&) const = default;
};

/// Stacked Doppler model y = A h with rows [sin az, cos az] and y = -range_rate.
struct LsqSystem {
  Eigen::MatrixX2d A;
  Eigen::VectorXd y;
};

struct EgoVelocityEstimate {
  double timestamp = 0.0;
  Vec2 velocity = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();
  std::size_t n_inliers = 0;
  std::size_t n_total = 0;

  bool operator==(const EgoVelocityEstimate&) const = default;
};

struct RansacConfig {
  double inlier_fraction_threshold = 0.40;
  double residual_threshold = 0.025;  // m/s
  std::size_t max_iterations = 500;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct RansacFit {
  EgoVelocityEstimate estimate;
  std::vector<std::size_t> inliers;  // indices into scan.detections, ascending
};

/// Condition-number cap on A^T A beyond which azimuths are considered collinear.
inline constexpr double kMaxNormalCondition = 1e8;

LsqSystem build_lsq(const RadarScan& scan);

/// Least-squares ego-velocity with covariance (eps^T eps / (N - 2)) (A^T A)^-1.
/// The timestamp and counts of the result are left for the caller except
/// n_inliers = n_total = N.
EgoVelocityEstimate solve_ego_velocity(const LsqSystem& system);

/// Per-scan RNG seed: rng_seed mixed with the bit pattern of the timestamp.
std::uint64_t scan_seed(std::uint64_t rng_seed, double timestamp);

/// RANSAC over minimal two-detection samples, refit on the best consensus set.
/// When the number of distinct pairs does not exceed max_iterations, every pair
/// is tried and the result does not depend on the seed.
RansacFit ransac_fit(const RadarScan& scan, const RansacConfig& cfg);

EgoVelocityEstimate ransac_ego_velocity(const RadarScan& scan, const RansacConfig& cfg);

}  // namespace rrcal
