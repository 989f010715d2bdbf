#include "rrcal/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rrcal/error.hpp"
#include "rrcal/initialization.hpp"

namespace rrcal {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

double observability_det(const ExcitationSample& sample) {
  return sample.alpha_gamma * cross2(sample.h_a, unit_vector(sample.theta_t));
}

std::vector<double> finite_difference(std::span<const double> timestamps,
                                      std::span<const double> values) {
  const std::size_t n = values.size();
  if (timestamps.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "finite_difference: length mismatch");
  }
  if (n < 2) throw Error(ErrorCode::kInsufficientData, "finite_difference: need 2 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "finite_difference: timestamps not increasing");
    }
  }
  std::vector<double> d(n);
  d[0] = (values[1] - values[0]) / (timestamps[1] - timestamps[0]);
  d[n - 1] = (values[n - 1] - values[n - 2]) / (timestamps[n - 1] - timestamps[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d[i] = (values[i + 1] - values[i - 1]) / (timestamps[i + 1] - timestamps[i - 1]);
  }
  return d;
}

ExcitationReport excitation_report(std::span<const ExcitationSample> samples,
                                   const ExcitationThresholds& thresholds) {
  ExcitationReport report;
  report.sample_count = samples.size();
  if (samples.empty()) {
    throw Error(ErrorCode::kInsufficientData, "excitation_report: no samples");
  }
  std::vector<double> speeds;
  std::vector<double> alphas;
  std::vector<double> dets;
  for (const ExcitationSample& s : samples) {
    speeds.push_back(s.h_a.norm());
    alphas.push_back(std::abs(s.alpha_gamma));
    dets.push_back(std::abs(observability_det(s)));
  }
  report.det_threshold = thresholds.relative_det * median_of(speeds) * median_of(alphas);

  std::size_t degenerate = 0;
  std::size_t zero_alpha = 0;
  std::size_t zero_velocity = 0;
  std::size_t aligned = 0;
  double sum = 0.0;
  report.min_abs_det = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ExcitationSample& s = samples[i];
    const bool no_alpha = alphas[i] <= thresholds.alpha_floor;
    const bool no_speed = speeds[i] < thresholds.min_speed;
    const bool along_axis =
        std::abs(cross2(s.h_a, unit_vector(s.theta_t))) <= thresholds.axis_sine * speeds[i];
    zero_alpha += no_alpha;
    zero_velocity += no_speed;
    aligned += along_axis;
    if (no_alpha || no_speed || dets[i] <= report.det_threshold) ++degenerate;
    sum += dets[i];
    report.min_abs_det = std::min(report.min_abs_det, dets[i]);
  }
  const auto n = static_cast<double>(samples.size());
  report.fraction_degenerate = static_cast<double>(degenerate) / n;
  report.mean_abs_det = sum / n;
  report.flags.zero_alpha = static_cast<double>(zero_alpha) > thresholds.flag_fraction * n;
  report.flags.zero_velocity = static_cast<double>(zero_velocity) > thresholds.flag_fraction * n;
  report.flags.axis_aligned_motion = static_cast<double>(aligned) > thresholds.flag_fraction * n;
  return report;
}

ExcitationReport excitation_report(std::span<const MeasurementPair> pairs,
                                   const Extrinsics& extrinsics_guess,
                                   const ExcitationThresholds& thresholds) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "excitation_report: need at least 3 pairs");
  }
  const auto motion = init_motion_states(pairs, extrinsics_guess);
  std::vector<double> times;
  std::vector<double> omegas;
  std::vector<Vec2> velocities;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (!motion[j]) continue;
    times.push_back(pairs[j].timestamp);
    omegas.push_back(motion[j]->omega_gamma);
    velocities.push_back(pairs[j].a.velocity);
  }
  if (times.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "excitation_report: fewer than 3 usable pairs");
  }
  const std::vector<double> alpha = finite_difference(times, omegas);
  std::vector<ExcitationSample> samples;
  samples.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    samples.push_back({velocities[i], omegas[i], alpha[i], extrinsics_guess.theta_t});
  }
  return excitation_report(samples, thresholds);
}

}  // namespace rrcal
