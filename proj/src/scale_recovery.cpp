#include "rrcal/scale_recovery.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rrcal/error.hpp"

namespace rrcal {
namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

Mat3 transition(double dt) {
  Mat3 f;
  f << 1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0;
  return f;
}

Mat3 process_noise(double dt, double q) {
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  Mat3 m;
  m << dt3 * dt2 / 20.0, dt2 * dt2 / 8.0, dt3 / 6.0,
       dt2 * dt2 / 8.0, dt3 / 3.0, dt2 / 2.0,
       dt3 / 6.0, dt2 / 2.0, dt;
  return q * m;
}

}  // namespace

void AngularRateSeries::validate() const {
  if (timestamps.size() != omega_ref.size()) {
    throw Error(ErrorCode::kInvalidArgument, "angular rate series: length mismatch");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "angular rate series: timestamps not strictly increasing");
    }
  }
}

std::optional<double> AngularRateSeries::at(double t) const {
  if (timestamps.empty() || t < timestamps.front() || t > timestamps.back()) return std::nullopt;
  const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  const auto hi = static_cast<std::size_t>(it - timestamps.begin());
  if (timestamps[hi] == t) return omega_ref[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - timestamps[lo]) / (timestamps[hi] - timestamps[lo]);
  return (1.0 - w) * omega_ref[lo] + w * omega_ref[hi];
}

AngularRateSeries smooth_angular_rate_from_poses(std::span<const HeadingSample> poses,
                                                 std::span<const double> query_times,
                                                 const HeadingSmootherConfig& config) {
  const std::size_t n = poses.size();
  if (n < 3) throw Error(ErrorCode::kInsufficientData, "heading smoother: need 3 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(poses[i].t > poses[i - 1].t)) {
      throw Error(ErrorCode::kInvalidArgument, "heading smoother: timestamps not increasing");
    }
  }
  std::vector<double> heading(n);
  heading[0] = poses[0].heading;
  for (std::size_t i = 1; i < n; ++i) {
    heading[i] = heading[i - 1] + wrap_pi(poses[i].heading - poses[i - 1].heading);
  }

  // Prior from the quadratic through the first three samples.
  const double t0 = poses[0].t;
  const double t1 = poses[1].t;
  const double t2 = poses[2].t;
  const double d01 = (heading[1] - heading[0]) / (t1 - t0);
  const double d12 = (heading[2] - heading[1]) / (t2 - t1);
  const double accel = 2.0 * (d12 - d01) / (t2 - t0);
  const double rate0 = d01 - 0.5 * accel * (t1 - t0);

  const double r = config.heading_sigma * config.heading_sigma;
  const Eigen::RowVector3d h(1.0, 0.0, 0.0);
  std::vector<Vec3> x_pred(n), x_filt(n);
  std::vector<Mat3> p_pred(n), p_filt(n);
  x_pred[0] = Vec3(heading[0], rate0, accel);
  p_pred[0] = Mat3::Identity() * 1e4;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double dt = poses[i].t - poses[i - 1].t;
      const Mat3 f = transition(dt);
      x_pred[i] = f * x_filt[i - 1];
      p_pred[i] = f * p_filt[i - 1] * f.transpose() + process_noise(dt, config.jerk_psd);
    }
    const double s = (h * p_pred[i] * h.transpose())(0, 0) + r;
    const Vec3 k = p_pred[i] * h.transpose() / s;
    x_filt[i] = x_pred[i] + k * (heading[i] - x_pred[i](0));
    p_filt[i] = (Mat3::Identity() - k * h) * p_pred[i];
  }
  std::vector<Vec3> x_smooth(x_filt);
  for (std::size_t i = n - 1; i-- > 0;) {
    const Mat3 f = transition(poses[i + 1].t - poses[i].t);
    const Mat3 gain = p_filt[i] * f.transpose() * p_pred[i + 1].inverse();
    x_smooth[i] = x_filt[i] + gain * (x_smooth[i + 1] - x_pred[i + 1]);
  }

  AngularRateSeries smoothed;
  smoothed.source = "heading-smoother";
  for (std::size_t i = 0; i < n; ++i) {
    smoothed.timestamps.push_back(poses[i].t);
    smoothed.omega_ref.push_back(x_smooth[i](1));
  }
  if (query_times.empty()) return smoothed;

  AngularRateSeries out;
  out.source = smoothed.source;
  for (double t : query_times) {
    const std::optional<double> w = smoothed.at(t);
    if (!w) continue;
    if (!out.timestamps.empty() && !(t > out.timestamps.back())) {
      throw Error(ErrorCode::kInvalidArgument, "heading smoother: query times not increasing");
    }
    out.timestamps.push_back(t);
    out.omega_ref.push_back(*w);
  }
  return out;
}

ScaleResult recover_scale(const CalibrationReport& calib, const AngularRateSeries& ref,
                          double min_rate) {
  ref.validate();
  if (calib.timestamps.size() != calib.fused_motion.size()) {
    throw Error(ErrorCode::kInvalidArgument, "recover_scale: report timestamps do not match states");
  }
  std::vector<double> signed_ratios;
  std::vector<double> magnitudes;
  for (std::size_t i = 0; i < calib.fused_motion.size(); ++i) {
    const std::optional<double> w = ref.at(calib.timestamps[i]);
    if (!w || std::abs(*w) < min_rate) continue;
    const double ratio = calib.fused_motion[i].omega_gamma / *w;
    signed_ratios.push_back(ratio);
    magnitudes.push_back(std::abs(ratio));
  }
  if (magnitudes.size() < 10) {
    throw Error(ErrorCode::kInsufficientExcitation,
                "recover_scale: " + std::to_string(magnitudes.size()) +
                    " samples with |omega_ref| >= min_rate, need 10");
  }
  ScaleResult result;
  result.n_samples_used = magnitudes.size();
  result.gamma = median(signed_ratios);
  result.translation_magnitude = median(std::move(magnitudes));
  result.sign_ambiguous = true;
  return result;
}

}  // namespace rrcal
