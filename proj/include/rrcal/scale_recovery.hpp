#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrcal/solver.hpp"

namespace rrcal {

struct AngularRateSeries {
  std::vector<double> timestamps;  // strictly increasing
  std::vector<double> omega_ref;   // rad/s
  std::string source;

  void validate() const;
  /// Linear interpolation; nullopt outside the covered interval.
  std::optional<double> at(double t) const;

  bool operator==(const AngularRateSeries&) const = default;
};

struct HeadingSample {
  double t = 0.0;
  double heading = 0.0;  // rad, may be wrapped

  bool operator==(const HeadingSample&) const = default;
};

struct HeadingSmootherConfig {
  double heading_sigma = 0.01;  // rad, measurement noise
  double jerk_psd = 0.05;       // rad^2 / s^5, white angular jerk
};

/// Constant-acceleration Kalman filter plus Rauch-Tung-Striebel pass over the
/// unwrapped heading; the smoothed rate state is interpolated linearly onto
/// query_times (the pose timestamps when empty).
AngularRateSeries smooth_angular_rate_from_poses(std::span<const HeadingSample> poses,
                                                 std::span<const double> query_times = {},
                                                 const HeadingSmootherConfig& config = {});

struct ScaleResult {
  double gamma = 0.0;                  // median signed omega_gamma / omega_ref
  double translation_magnitude = 0.0;  // m, median |omega_gamma| / |omega_ref|
  std::size_t n_samples_used = 0;
  bool sign_ambiguous = true;

  bool operator==(const ScaleResult&) const = default;
};

inline constexpr double kDefaultMinRate = 0.1;  // rad/s

/// Metric |t| from the fused unscaled rates. Samples whose reference rate is
/// below min_rate or outside the reference interval are skipped; at least 10
/// must remain.
ScaleResult recover_scale(const CalibrationReport& calib, const AngularRateSeries& ref,
                          double min_rate = kDefaultMinRate);

}  // namespace rrcal
