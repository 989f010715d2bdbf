#pragma once

#include <vector>

#include "rrcal/ego_velocity.hpp"
#include "rrcal/geometry.hpp"

namespace rrcal {

/// Time-aligned ego-velocity estimates of radars a and b.
struct MeasurementPair {
  double timestamp = 0.0;
  EgoVelocityEstimate a;
  EgoVelocityEstimate b;

  bool operator==(const MeasurementPair&) const = default;
};

/// Per-instant motion: radar a velocity (its own frame) and the unscaled
/// angular rate omega * |t|.
struct MotionState {
  Vec2 v_a = Vec2::Zero();
  double omega_gamma = 0.0;

  bool operator==(const MotionState&) const = default;
};

/// theta_t: angle of the translation axis in radar a's frame, [0, pi) once
/// reported. theta_ba: rotation taking radar-a vectors into radar b's frame.
struct Extrinsics {
  double theta_t = 0.0;
  double theta_ba = 0.0;

  Vec2 translation_axis() const { return unit_vector(theta_t); }

  bool operator==(const Extrinsics&) const = default;
};

struct CalibState {
  std::vector<MotionState> motion;
  Extrinsics extrinsics;
};

}  // namespace rrcal
