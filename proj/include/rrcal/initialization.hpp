#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rrcal/types.hpp"

namespace rrcal {

/// Number of similar-magnitude pairs used for the rotation initialization:
/// min(50, M / 4), at least 1.
std::size_t default_rotation_pairs(std::size_t pair_count);

/// Sample minimizing the summed absolute angular deviation (period 2 pi).
double circular_median(std::span<const double> angles);

/// Sample minimizing the summed axis distance (period pi); result in [0, pi).
double axis_median(std::span<const double> angles);

/// Median signed angle from h_a to h_b over the k pairs whose speeds agree best.
/// Pairs with either speed below min_speed are ignored.
double init_rotation(std::span<const MeasurementPair> pairs, std::size_t k,
                     double min_speed = 0.05);

/// Median axis of b = R(theta_ba)^T h_b - h_a over pairs with |b| >= min_norm.
double init_translation_axis(std::span<const MeasurementPair> pairs, double theta_ba,
                             double min_norm = 0.05);

/// Closed-form weighted solve for (v_a, omega_gamma) at each timestep with the
/// extrinsics held fixed. Timesteps with a singular normal matrix are nullopt.
std::vector<std::optional<MotionState>> init_motion_states(
    std::span<const MeasurementPair> pairs, const Extrinsics& extrinsics);

}  // namespace rrcal
