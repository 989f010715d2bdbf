#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rrcal/error.hpp"
#include "rrcal/identifiability.hpp"
#include "rrcal/types.hpp"

namespace rrcal {

struct SolverOptions {
  std::size_t max_iterations = 100;
  double initial_lambda = 1e-3;
  double lambda_factor = 10.0;
  double max_lambda = 1e16;
  /// Converged when |grad|_inf falls below this...
  double gradient_tolerance = 1e-8;
  /// ...or an accepted step lowers the cost by less than this fraction...
  double relative_cost_tolerance = 1e-12;
  /// ...or the step is negligible relative to the state.
  double step_tolerance = 1e-12;

  /// Pairs used by the rotation initialization; 0 selects min(50, M / 4).
  std::size_t rotation_pairs = 0;
  double init_min_speed = 0.05;     // m/s
  double init_min_lever = 0.05;     // m/s, floor on |b| for the axis initialization

  bool check_excitation = true;
  double max_degenerate_fraction = 0.5;
  ExcitationThresholds excitation;
  /// Smallest / largest eigenvalue of the marginal extrinsic information
  /// below which the solution is reported as a flat direction.
  double min_information_ratio = 1e-10;

  /// Skips rotation and axis initialization when set.
  std::optional<Extrinsics> initial_extrinsics;
};

struct ResidualSummary {
  double whitened_rms = 0.0;
  double rms_error_a = 0.0;  // m/s, |h_a - v_a|
  double rms_error_b = 0.0;  // m/s, |h_b - predicted|

  bool operator==(const ResidualSummary&) const = default;
};

struct CalibrationReport {
  Extrinsics extrinsics;          // theta_t in [0, pi), theta_ba in (-pi, pi]
  Extrinsics initial_extrinsics;
  Mat2 extrinsic_covariance = Mat2::Zero();   // rows/cols: theta_t, theta_ba
  Mat2 extrinsic_information = Mat2::Zero();  // Schur complement onto the extrinsics
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool flat_direction = false;
  ExcitationReport excitation;
  std::vector<MotionState> fused_motion;
  std::vector<double> timestamps;
  std::vector<std::size_t> pair_indices;  // into the input pairs, one per fused state
  std::vector<double> cost_history;       // cost after each accepted step, starting with the initial cost
  double mean_velocity_error = 0.0;
  ResidualSummary residuals;

  bool operator==(const CalibrationReport&) const = default;
};

class UnidentifiableError : public Error {
 public:
  UnidentifiableError(const std::string& message, ExcitationReport report)
      : Error(ErrorCode::kUnidentifiable, message), report_(report) {}

  const ExcitationReport& report() const noexcept { return report_; }

 private:
  ExcitationReport report_;
};

/// Initialization followed by Levenberg-Marquardt with the motion states
/// eliminated through the Schur complement.
CalibrationReport solve_lm(std::span<const MeasurementPair> pairs,
                           const SolverOptions& options = {});

/// LM from a given state only; no initialization or excitation check.
CalibrationReport refine_lm(std::span<const MeasurementPair> pairs, const CalibState& initial,
                            const SolverOptions& options = {});

/// Radar velocities expressed in each radar's own frame.
struct RadarVelocityTruth {
  Vec2 v_a = Vec2::Zero();
  Vec2 v_b = Vec2::Zero();
};

struct FusedVelocityErrors {
  std::vector<double> raw_a;
  std::vector<double> fused_a;
  std::vector<double> raw_b;
  std::vector<double> fused_b;

  bool operator==(const FusedVelocityErrors&) const = default;
};

enum class VelocityReference { kGroundTruth, kModel };

/// Raw and fused velocity error magnitudes per fused timestep. With kGroundTruth,
/// truth must have one entry per input pair. With kModel the fused velocities
/// are the reference, so fused errors are zero and raw errors are the residuals.
FusedVelocityErrors fused_ego_velocities(const CalibrationReport& report,
                                         std::span<const MeasurementPair> pairs,
                                         VelocityReference reference,
                                         std::span<const RadarVelocityTruth> truth = {});

}  // namespace rrcal
