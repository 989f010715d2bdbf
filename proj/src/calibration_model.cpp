#include "rrcal/calibration_model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "rrcal/error.hpp"

namespace rrcal {

Mat2 whitening_factor(const Mat2& covariance) {
  if (!covariance.allFinite()) {
    throw Error(ErrorCode::kInvalidWeight, "covariance has non-finite entries");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-9 * scale) {
    throw Error(ErrorCode::kInvalidWeight, "covariance is not symmetric");
  }
  const Mat2 floored = covariance + kCovarianceFloor * Mat2::Identity();
  Eigen::LLT<Mat2> cov_llt(floored);
  if (cov_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidWeight, "covariance is not positive semi-definite");
  }
  Eigen::LLT<Mat2> info_llt(floored.inverse());
  if (info_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidWeight, "information matrix is not positive definite");
  }
  return info_llt.matrixU();
}

Vec2 predict_b(const MotionState& motion, const Extrinsics& extrinsics) {
  return rot2(extrinsics.theta_ba) *
         (wedge(motion.omega_gamma) * extrinsics.translation_axis() + motion.v_a);
}

Eigen::SparseMatrix<double> BlockJacobian::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(motion.size() * 20);
  const Eigen::Index m = static_cast<Eigen::Index>(motion.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& jm = motion[static_cast<std::size_t>(j)];
    const auto& je = extrinsic[static_cast<std::size_t>(j)];
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        if (jm(r, c) != 0.0) triplets.emplace_back(4 * j + r, 3 * j + c, jm(r, c));
      }
      for (Eigen::Index c = 0; c < 2; ++c) {
        if (je(r, c) != 0.0) triplets.emplace_back(4 * j + r, 3 * m + c, je(r, c));
      }
    }
  }
  Eigen::SparseMatrix<double> out(rows(), cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::MatrixXd BlockJacobian::to_dense() const { return Eigen::MatrixXd(to_sparse()); }

CalibrationProblem::CalibrationProblem(std::span<const MeasurementPair> pairs)
    : pairs_(pairs.begin(), pairs.end()) {
  weight_a_.reserve(pairs_.size());
  weight_b_.reserve(pairs_.size());
  for (const MeasurementPair& p : pairs_) {
    weight_a_.push_back(whitening_factor(p.a.covariance));
    weight_b_.push_back(whitening_factor(p.b.covariance));
  }
}

void CalibrationProblem::check_state(const CalibState& state) const {
  if (state.motion.size() != pairs_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "state has " + std::to_string(state.motion.size()) + " motion states for " +
                    std::to_string(pairs_.size()) + " pairs");
  }
}

Eigen::Vector4d CalibrationProblem::residual(std::size_t j, const MotionState& motion,
                                             const Extrinsics& extrinsics) const {
  const MeasurementPair& p = pairs_[j];
  Eigen::Vector4d r;
  r.head<2>() = weight_a_[j] * (p.a.velocity - motion.v_a);
  r.tail<2>() = weight_b_[j] * (p.b.velocity - predict_b(motion, extrinsics));
  return r;
}

Eigen::VectorXd CalibrationProblem::residuals(const CalibState& state) const {
  check_state(state);
  Eigen::VectorXd r(4 * static_cast<Eigen::Index>(pairs_.size()));
  for (std::size_t j = 0; j < pairs_.size(); ++j) {
    r.segment<4>(4 * static_cast<Eigen::Index>(j)) =
        residual(j, state.motion[j], state.extrinsics);
  }
  return r;
}

double CalibrationProblem::cost(const CalibState& state) const {
  check_state(state);
  double total = 0.0;
  for (std::size_t j = 0; j < pairs_.size(); ++j) {
    total += residual(j, state.motion[j], state.extrinsics).squaredNorm();
  }
  return total;
}

BlockJacobian CalibrationProblem::jacobian(const CalibState& state) const {
  check_state(state);
  const Extrinsics& ex = state.extrinsics;
  const Mat2 rot = rot2(ex.theta_ba);
  const Mat2 rot_deriv = rot * wedge(1.0);
  const Vec2 axis = ex.translation_axis();
  const Vec2 axis_deriv(-std::sin(ex.theta_t), std::cos(ex.theta_t));
  const Vec2 lever_dir = wedge(1.0) * axis;

  BlockJacobian jac;
  jac.motion.resize(pairs_.size());
  jac.extrinsic.resize(pairs_.size());
  for (std::size_t j = 0; j < pairs_.size(); ++j) {
    const MotionState& ms = state.motion[j];
    const Mat2& wa = weight_a_[j];
    const Mat2& wb = weight_b_[j];
    auto& jm = jac.motion[j];
    auto& je = jac.extrinsic[j];
    jm.setZero();
    je.setZero();
    jm.block<2, 2>(0, 0) = -wa;
    jm.block<2, 2>(2, 0) = -wb * rot;
    jm.block<2, 1>(2, 2) = -wb * rot * lever_dir;
    je.block<2, 1>(2, 0) = -wb * rot * (wedge(ms.omega_gamma) * axis_deriv);
    je.block<2, 1>(2, 1) = -wb * rot_deriv * (wedge(ms.omega_gamma) * axis + ms.v_a);
  }
  return jac;
}

Eigen::VectorXd residuals(const CalibState& state, std::span<const MeasurementPair> pairs) {
  return CalibrationProblem(pairs).residuals(state);
}

BlockJacobian jacobian(const CalibState& state, std::span<const MeasurementPair> pairs) {
  return CalibrationProblem(pairs).jacobian(state);
}

double objective_free_translation(std::span<const MeasurementPair> pairs,
                                  std::span<const Vec2> v_a, std::span<const double> omega,
                                  const Vec2& translation, double theta_ba) {
  if (v_a.size() != pairs.size() || omega.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "objective: state length does not match pairs");
  }
  const Mat2 rot = rot2(theta_ba);
  double total = 0.0;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const Mat2 info_a = (pairs[j].a.covariance + kCovarianceFloor * Mat2::Identity()).inverse();
    const Mat2 info_b = (pairs[j].b.covariance + kCovarianceFloor * Mat2::Identity()).inverse();
    const Vec2 ea = pairs[j].a.velocity - v_a[j];
    const Vec2 eb = pairs[j].b.velocity - rot * (wedge(omega[j]) * translation + v_a[j]);
    total += ea.dot(info_a * ea) + eb.dot(info_b * eb);
  }
  return total;
}

std::vector<double> velocity_errors(std::span<const MeasurementPair> pairs,
                                    const Extrinsics& extrinsics) {
  const Mat2 rot = rot2(extrinsics.theta_ba);
  const Vec2 axis = extrinsics.translation_axis();
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const MeasurementPair& p : pairs) {
    // e_b = R (d - omega J t) with d = R^T h_b - h_a; |J t| = 1, so the best
    // omega removes the J t component and leaves the component along t.
    const Vec2 d = rot.transpose() * p.b.velocity - p.a.velocity;
    out.push_back(std::abs(axis.dot(d)));
  }
  return out;
}

double velocity_error_metric(std::span<const MeasurementPair> pairs,
                             const Extrinsics& extrinsics) {
  if (pairs.empty()) return 0.0;
  const std::vector<double> errs = velocity_errors(pairs, extrinsics);
  return std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
}

}  // namespace rrcal
