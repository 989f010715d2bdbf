#include "rrcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rrcal/error.hpp"

namespace rrcal {
namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kDefaultPeriod = 15.0;

}  // namespace

double HarmonicSignal::value(double t) const {
  double v = offset;
  for (const Harmonic& h : terms) v += h.amplitude * std::sin(kTwoPi * h.frequency_hz * t + h.phase);
  return v;
}

double HarmonicSignal::derivative(double t) const {
  double d = 0.0;
  for (const Harmonic& h : terms) {
    const double w = kTwoPi * h.frequency_hz;
    d += h.amplitude * w * std::cos(w * t + h.phase);
  }
  return d;
}

PeriodicChannels periodic_default_channels() {
  const double f = 1.0 / kDefaultPeriod;
  PeriodicChannels c;
  c.vx = {1.0, {{0.6, f, 0.0}}};
  c.vy = {0.2, {{0.4, 2.0 * f, kPi / 2.0}}};  // 0.4 cos(4 pi t / T)
  c.omega = {0.0, {{0.6, f, kPi / 3.0}}};
  return c;
}

void TrajectoryProfile::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory: duration must be positive");
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory: rate must be positive");
  }
  if (!rig.translation.allFinite() || !std::isfinite(rig.theta_ba)) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory: rig geometry must be finite");
  }
  if (rig.translation.norm() == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory: translation must be nonzero");
  }
}

void NoiseSpec::validate() const {
  if (!(sigma_r >= 0.0) || !(detection_range_rate_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise: sigmas must be non-negative");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise: outlier fraction must lie in [0, 1)");
  }
}

Extrinsics GroundTruth::extrinsics() const {
  return {wrap_axis(std::atan2(rig.translation.y(), rig.translation.x())),
          wrap_pi(rig.theta_ba)};
}

double GroundTruth::omega_scale() const {
  const Vec2 axis = extrinsics().translation_axis();
  const double magnitude = rig.translation.norm();
  return axis.dot(rig.translation) >= 0.0 ? magnitude : -magnitude;
}

MotionState GroundTruth::motion(std::size_t j) const {
  return {samples.at(j).v_a, samples.at(j).omega * omega_scale()};
}

RadarVelocityTruth GroundTruth::radar_velocities(std::size_t j) const {
  const TruthSample& s = samples.at(j);
  return {s.v_a, rot2(rig.theta_ba) * (wedge(s.omega) * rig.translation + s.v_a)};
}

std::vector<RadarVelocityTruth> GroundTruth::radar_velocities() const {
  std::vector<RadarVelocityTruth> out;
  out.reserve(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) out.push_back(radar_velocities(j));
  return out;
}

GroundTruth generate_trajectory(const TrajectoryProfile& profile) {
  profile.validate();
  GroundTruth truth;
  truth.rig = profile.rig;
  const auto count = static_cast<std::size_t>(std::floor(profile.duration * profile.rate + 1e-9));
  truth.samples.reserve(count);
  const PeriodicChannels periodic = periodic_default_channels();
  for (std::size_t j = 0; j < count; ++j) {
    TruthSample s;
    s.t = static_cast<double>(j) / profile.rate;
    switch (profile.kind) {
      case TrajectoryKind::kPeriodicDefault:
        s.v_a = {periodic.vx.value(s.t), periodic.vy.value(s.t)};
        s.omega = periodic.omega.value(s.t);
        s.alpha = periodic.omega.derivative(s.t);
        break;
      case TrajectoryKind::kConstantOmega:
        s.v_a = profile.velocity;
        s.omega = profile.omega;
        break;
      case TrajectoryKind::kStraightLine:
        s.v_a = profile.velocity;
        break;
      case TrajectoryKind::kCustomHarmonics:
        s.v_a = {profile.vx.value(s.t), profile.vy.value(s.t)};
        s.omega = profile.omega_signal.value(s.t);
        s.alpha = profile.omega_signal.derivative(s.t);
        break;
    }
    truth.samples.push_back(s);
  }
  return truth;
}

std::vector<MeasurementPair> simulate_pairs(const GroundTruth& truth, const NoiseSpec& noise) {
  noise.validate();
  std::mt19937_64 rng(noise.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Mat2 cov = noise.sigma_r * noise.sigma_r * Mat2::Identity();
  std::vector<MeasurementPair> pairs;
  pairs.reserve(truth.samples.size());
  for (std::size_t j = 0; j < truth.samples.size(); ++j) {
    const RadarVelocityTruth v = truth.radar_velocities(j);
    const double t = truth.samples[j].t;
    MeasurementPair p;
    p.timestamp = t;
    const double nax = gauss(rng);
    const double nay = gauss(rng);
    const double nbx = gauss(rng);
    const double nby = gauss(rng);
    p.a = {t, v.v_a + noise.sigma_r * Vec2(nax, nay), cov, 0, 0};
    p.b = {t, v.v_b + noise.sigma_r * Vec2(nbx, nby), cov, 0, 0};
    pairs.push_back(p);
  }
  return pairs;
}

std::vector<Pose2> integrate_poses(const GroundTruth& truth) {
  std::vector<Pose2> poses(truth.samples.size());
  for (std::size_t j = 1; j < truth.samples.size(); ++j) {
    const TruthSample& s0 = truth.samples[j - 1];
    const TruthSample& s1 = truth.samples[j];
    const double dt = s1.t - s0.t;
    poses[j].heading = poses[j - 1].heading + 0.5 * (s0.omega + s1.omega) * dt;
    poses[j].position = poses[j - 1].position +
                        0.5 * dt *
                            (rot2(poses[j - 1].heading) * s0.v_a + rot2(poses[j].heading) * s1.v_a);
  }
  return poses;
}

std::vector<Vec2> make_landmarks(const GroundTruth& truth, const LandmarkSpec& spec) {
  const std::vector<Pose2> poses = integrate_poses(truth);
  Vec2 centre = Vec2::Zero();
  for (const Pose2& p : poses) centre += p.position;
  if (!poses.empty()) centre /= static_cast<double>(poses.size());
  double extent = 0.0;
  for (const Pose2& p : poses) {
    extent = std::max(extent, (p.position - centre).norm() + truth.rig.translation.norm());
  }
  const double inner = extent + spec.margin;
  const double outer = inner + spec.width;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> landmarks;
  landmarks.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    // area-uniform radius
    const double r = std::sqrt(inner * inner + unit(rng) * (outer * outer - inner * inner));
    const double phi = kTwoPi * unit(rng);
    landmarks.push_back(centre + r * unit_vector(phi));
  }
  return landmarks;
}

ScanStreams simulate_scans(const GroundTruth& truth, std::span<const Vec2> landmarks,
                           const NoiseSpec& noise, const RadarModel& radar) {
  noise.validate();
  const std::vector<Pose2> poses = integrate_poses(truth);
  std::mt19937_64 rng(noise.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> offset(0.5, 3.0);

  auto observe = [&](const Pose2& pose, const Vec2& velocity, double timestamp,
                     const char* id, std::vector<RadarScan>& scans,
                     std::vector<std::vector<bool>>& labels) {
    RadarScan scan;
    scan.timestamp = timestamp;
    scan.radar_id = id;
    const Mat2 to_radar = rot2(pose.heading).transpose();
    for (const Vec2& landmark : landmarks) {
      const Vec2 q = to_radar * (landmark - pose.position);
      const double range = q.norm();
      const double azimuth = std::atan2(q.x(), q.y());
      if (range <= 0.0 || range > radar.max_range || std::abs(azimuth) > radar.half_fov) continue;
      const double rr = -(std::sin(azimuth) * velocity.x() + std::cos(azimuth) * velocity.y());
      scan.detections.push_back(
          {range, azimuth, rr + noise.detection_range_rate_sigma * gauss(rng)});
    }
    std::vector<bool> is_outlier(scan.detections.size(), false);
    const auto n_out = static_cast<std::size_t>(
        std::llround(noise.outlier_fraction * static_cast<double>(scan.detections.size())));
    if (n_out > 0) {
      std::vector<std::size_t> order(scan.detections.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < n_out; ++k) {
        const double sign = (rng() & 1U) ? 1.0 : -1.0;
        scan.detections[order[k]].range_rate += sign * offset(rng);
        is_outlier[order[k]] = true;
      }
    }
    scans.push_back(std::move(scan));
    labels.push_back(std::move(is_outlier));
  };

  ScanStreams out;
  for (std::size_t j = 0; j < truth.samples.size(); ++j) {
    const Pose2& pa = poses[j];
    const Pose2 pb{pa.position + rot2(pa.heading) * truth.rig.translation,
                   pa.heading - truth.rig.theta_ba};
    const RadarVelocityTruth v = truth.radar_velocities(j);
    observe(pa, v.v_a, truth.samples[j].t, "a", out.a, out.outliers_a);
    observe(pb, v.v_b, truth.samples[j].t, "b", out.b, out.outliers_b);
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial) {
  std::uint64_t x = base_seed * 0x9e3779b97f4a7c15ULL + cell * 0x100000001b3ULL + trial;
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

}  // namespace rrcal
