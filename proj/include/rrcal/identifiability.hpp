#pragma once

#include <span>
#include <vector>

#include "rrcal/types.hpp"

namespace rrcal {

struct ExcitationSample {
  Vec2 h_a = Vec2::Zero();
  double omega_gamma = 0.0;
  double alpha_gamma = 0.0;  // d(omega_gamma)/dt
  double theta_t = 0.0;
};

struct ExcitationFlags {
  bool zero_alpha = false;
  bool zero_velocity = false;
  bool axis_aligned_motion = false;

  bool operator==(const ExcitationFlags&) const = default;
};

struct ExcitationThresholds {
  /// A timestep is degenerate when |det| <= relative_det * median|h_a| * median|alpha|.
  double relative_det = 1e-3;
  /// |alpha_gamma| at or below this counts as zero angular acceleration.
  double alpha_floor = 1e-6;
  /// |h_a| below this counts as zero velocity.
  double min_speed = 0.05;
  /// |sin(angle(h_a, t))| at or below this counts as motion along the axis.
  double axis_sine = 1e-3;
  /// A flag is raised when its condition holds on more than this fraction of timesteps.
  double flag_fraction = 0.5;
};

struct ExcitationReport {
  double fraction_degenerate = 0.0;
  double min_abs_det = 0.0;
  double mean_abs_det = 0.0;
  double det_threshold = 0.0;
  std::size_t sample_count = 0;
  ExcitationFlags flags;

  bool operator==(const ExcitationReport&) const = default;
};

/// Determinant of the local observability matrix, alpha * (h_a x t)_z with
/// t = (cos theta_t, sin theta_t). Sign follows that cross-product order.
double observability_det(const ExcitationSample& sample);

/// Derivative of values over timestamps: central differences inside,
/// one-sided differences at both ends. Needs at least 2 samples.
std::vector<double> finite_difference(std::span<const double> timestamps,
                                      std::span<const double> values);

/// Per-timestep degeneracy classification using motion states initialized
/// at extrinsics_guess. Needs at least 3 pairs.
ExcitationReport excitation_report(std::span<const MeasurementPair> pairs,
                                   const Extrinsics& extrinsics_guess,
                                   const ExcitationThresholds& thresholds = {});

/// Same classification on precomputed samples (timestamps already folded into alpha).
ExcitationReport excitation_report(std::span<const ExcitationSample> samples,
                                   const ExcitationThresholds& thresholds = {});

}  // namespace rrcal
