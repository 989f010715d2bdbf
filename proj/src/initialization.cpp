#include "rrcal/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "rrcal/calibration_model.hpp"
#include "rrcal/error.hpp"

namespace rrcal {
namespace {

template <typename Distance>
double median_by(std::span<const double> values, Distance distance) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median of an empty set");
  double best = values.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (double candidate : values) {
    double c = 0.0;
    for (double v : values) c += distance(candidate, v);
    if (c < best_cost) {
      best_cost = c;
      best = candidate;
    }
  }
  return best;
}

}  // namespace

std::size_t default_rotation_pairs(std::size_t pair_count) {
  return std::max<std::size_t>(1, std::min<std::size_t>(50, pair_count / 4));
}

double circular_median(std::span<const double> angles) {
  return wrap_pi(median_by(angles, angle_distance));
}

double axis_median(std::span<const double> angles) {
  return wrap_axis(median_by(angles, axis_distance));
}

double init_rotation(std::span<const MeasurementPair> pairs, std::size_t k, double min_speed) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "init_rotation: k must be positive");
  struct Candidate {
    double mismatch;
    double angle;
  };
  std::vector<Candidate> usable;
  for (const MeasurementPair& p : pairs) {
    const double na = p.a.velocity.norm();
    const double nb = p.b.velocity.norm();
    if (na < min_speed || nb < min_speed || na == 0.0 || nb == 0.0) continue;
    const Vec2 ua = p.a.velocity / na;
    const Vec2 ub = p.b.velocity / nb;
    usable.push_back({std::abs(na - nb), std::atan2(cross2(ua, ub), ua.dot(ub))});
  }
  if (usable.size() < k) {
    throw Error(ErrorCode::kInsufficientData,
                "init_rotation: " + std::to_string(usable.size()) + " usable pairs, need " +
                    std::to_string(k));
  }
  std::stable_sort(usable.begin(), usable.end(),
                   [](const Candidate& x, const Candidate& y) { return x.mismatch < y.mismatch; });
  std::vector<double> angles;
  angles.reserve(k);
  for (std::size_t i = 0; i < k; ++i) angles.push_back(usable[i].angle);
  return circular_median(angles);
}

double init_translation_axis(std::span<const MeasurementPair> pairs, double theta_ba,
                             double min_norm) {
  const Mat2 rot_t = rot2(theta_ba).transpose();
  std::vector<double> axes;
  for (const MeasurementPair& p : pairs) {
    const Vec2 b = rot_t * p.b.velocity - p.a.velocity;
    const double norm = b.norm();
    if (norm < min_norm || norm == 0.0) continue;
    // b = omega * (-t_y, t_x): t is b rotated clockwise by 90 degrees, up to sign.
    axes.push_back(wrap_axis(std::atan2(-b.x() / norm, b.y() / norm)));
  }
  if (axes.empty()) {
    throw Error(ErrorCode::kInsufficientExcitation,
                "init_translation_axis: no pair shows a lever-arm velocity above " +
                    std::to_string(min_norm) + " m/s");
  }
  return axis_median(axes);
}

std::vector<std::optional<MotionState>> init_motion_states(
    std::span<const MeasurementPair> pairs, const Extrinsics& extrinsics) {
  const Mat2 rot = rot2(extrinsics.theta_ba);
  const Vec2 lever = rot * (wedge(1.0) * extrinsics.translation_axis());
  std::vector<std::optional<MotionState>> out;
  out.reserve(pairs.size());
  for (const MeasurementPair& p : pairs) {
    const Mat2 wa = whitening_factor(p.a.covariance);
    const Mat2 wb = whitening_factor(p.b.covariance);
    // Residual [W_a (h_a - v); W_b (h_b - R v - lever * omega)] is linear in
    // x = (v, omega): r = z - G x.
    Eigen::Matrix<double, 4, 3> g;
    g.block<2, 2>(0, 0) = wa;
    g.block<2, 1>(0, 2).setZero();
    g.block<2, 2>(2, 0) = wb * rot;
    g.block<2, 1>(2, 2) = wb * lever;
    Eigen::Vector4d z;
    z.head<2>() = wa * p.a.velocity;
    z.tail<2>() = wb * p.b.velocity;

    const Eigen::Matrix3d normal = g.transpose() * g;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(2);
    if (!(lo > 0.0) || hi / lo > 1e12) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const Eigen::Vector3d x = normal.ldlt().solve(g.transpose() * z);
    out.emplace_back(MotionState{x.head<2>(), x(2)});
  }
  return out;
}

}  // namespace rrcal
