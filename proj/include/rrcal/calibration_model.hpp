#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rrcal/types.hpp"

namespace rrcal {

/// Added to every ego-velocity covariance before it is used as a weight, (m/s)^2.
inline constexpr double kCovarianceFloor = 1e-6;

/// Upper-triangular W with W^T W = (cov + floor I)^-1, so |W e|^2 is the
/// Mahalanobis norm. Throws kInvalidWeight if the floored matrix is not
/// positive definite or not symmetric.
Mat2 whitening_factor(const Mat2& covariance);

/// Model prediction of radar b's ego-velocity.
Vec2 predict_b(const MotionState& motion, const Extrinsics& extrinsics);

/// Jacobian stored block-wise: residual rows 4j..4j+3 depend only on motion
/// columns 3j..3j+2 (vx, vy, omega_gamma) and the two extrinsic columns
/// 3M (theta_t), 3M+1 (theta_ba).
struct BlockJacobian {
  std::vector<Eigen::Matrix<double, 4, 3>> motion;
  std::vector<Eigen::Matrix<double, 4, 2>> extrinsic;

  Eigen::Index rows() const { return 4 * static_cast<Eigen::Index>(motion.size()); }
  Eigen::Index cols() const { return 3 * static_cast<Eigen::Index>(motion.size()) + 2; }
  Eigen::SparseMatrix<double> to_sparse() const;
  Eigen::MatrixXd to_dense() const;
};

/// Weighted least-squares problem over a fixed set of pairs. Whitening factors
/// are computed once at construction.
class CalibrationProblem {
 public:
  explicit CalibrationProblem(std::span<const MeasurementPair> pairs);

  std::size_t size() const { return pairs_.size(); }
  std::span<const MeasurementPair> pairs() const { return pairs_; }
  const Mat2& weight_a(std::size_t j) const { return weight_a_[j]; }
  const Mat2& weight_b(std::size_t j) const { return weight_b_[j]; }

  /// Whitened residual of one timestep: [W_a e_a; W_b e_b].
  Eigen::Vector4d residual(std::size_t j, const MotionState& motion,
                           const Extrinsics& extrinsics) const;
  Eigen::VectorXd residuals(const CalibState& state) const;
  BlockJacobian jacobian(const CalibState& state) const;
  double cost(const CalibState& state) const;

 private:
  void check_state(const CalibState& state) const;

  std::vector<MeasurementPair> pairs_;
  std::vector<Mat2> weight_a_;
  std::vector<Mat2> weight_b_;
};

Eigen::VectorXd residuals(const CalibState& state, std::span<const MeasurementPair> pairs);
BlockJacobian jacobian(const CalibState& state, std::span<const MeasurementPair> pairs);

/// Weighted objective with an unconstrained translation vector and true
/// angular rates; invariant under (omega * g, t / g).
double objective_free_translation(std::span<const MeasurementPair> pairs,
                                  std::span<const Vec2> v_a, std::span<const double> omega,
                                  const Vec2& translation, double theta_ba);

/// Mean |e_b| with v_a = h_a and the per-pair omega_gamma minimizing |e_b|.
double velocity_error_metric(std::span<const MeasurementPair> pairs,
                             const Extrinsics& extrinsics);

/// Per-pair values behind velocity_error_metric.
std::vector<double> velocity_errors(std::span<const MeasurementPair> pairs,
                                    const Extrinsics& extrinsics);

}  // namespace rrcal
