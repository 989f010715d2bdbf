#include <cmath>

#include "rrcal/error.hpp"
#include "rrcal/pipeline_io.hpp"

namespace rrcal {

Synchronizer::Synchronizer(double max_gap) : max_gap_(max_gap) {
  if (!(max_gap > 0.0)) throw Error(ErrorCode::kInvalidArgument, "synchronize: max_gap must be positive");
}

void Synchronizer::push_a(const EgoVelocityEstimate& estimate) {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "synchronize: push after finish");
  if (!pending_a_.empty() && !(estimate.timestamp > pending_a_.back().timestamp)) {
    throw Error(ErrorCode::kInvalidArgument, "synchronize: stream a not strictly increasing");
  }
  pending_a_.push_back(estimate);
}

void Synchronizer::push_b(const EgoVelocityEstimate& estimate) {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "synchronize: push after finish");
  if (!b_.empty() && !(estimate.timestamp > b_.back().timestamp)) {
    throw Error(ErrorCode::kInvalidArgument, "synchronize: stream b not strictly increasing");
  }
  b_.push_back(estimate);
}

std::vector<MeasurementPair> Synchronizer::drain() {
  while (!pending_a_.empty()) {
    const EgoVelocityEstimate& a = pending_a_.front();
    const double t = a.timestamp;
    if (b_.empty() || b_.back().timestamp < t) {
      if (!finished_) break;  // a later b may still bracket this sample
      pending_a_.pop_front();
      continue;
    }
    // b_.front() is the latest b sample kept from earlier brackets, so a front
    // after t means no b sample at or before t exists.
    if (b_.front().timestamp > t) {
      pending_a_.pop_front();
      continue;
    }
    std::size_t hi = 0;
    while (b_[hi].timestamp < t) ++hi;
    const std::size_t lo = b_[hi].timestamp == t ? hi : hi - 1;

    MeasurementPair pair;
    pair.timestamp = t;
    pair.a = a;
    if (lo == hi) {
      pair.b = b_[hi];
      ready_.push_back(pair);
    } else {
      const EgoVelocityEstimate& b0 = b_[lo];
      const EgoVelocityEstimate& b1 = b_[hi];
      if (b1.timestamp - b0.timestamp <= max_gap_) {
        const double w = (t - b0.timestamp) / (b1.timestamp - b0.timestamp);
        pair.b.timestamp = t;
        pair.b.velocity = (1.0 - w) * b0.velocity + w * b1.velocity;
        pair.b.covariance =
            b0.covariance.trace() >= b1.covariance.trace() ? b0.covariance : b1.covariance;
        pair.b.n_inliers = std::min(b0.n_inliers, b1.n_inliers);
        pair.b.n_total = std::min(b0.n_total, b1.n_total);
        ready_.push_back(pair);
      }
    }
    pending_a_.pop_front();
    for (std::size_t k = 0; k < lo; ++k) b_.pop_front();
  }
  std::vector<MeasurementPair> out;
  out.swap(ready_);
  return out;
}

std::vector<MeasurementPair> Synchronizer::finish() {
  finished_ = true;
  return drain();
}

std::vector<MeasurementPair> synchronize(std::span<const EgoVelocityEstimate> stream_a,
                                         std::span<const EgoVelocityEstimate> stream_b,
                                         double max_gap) {
  Synchronizer sync(max_gap);
  for (const auto& e : stream_a) sync.push_a(e);
  for (const auto& e : stream_b) sync.push_b(e);
  return sync.finish();
}

std::vector<MeasurementPair> filter_pairs(std::span<const MeasurementPair> pairs,
                                          double min_speed) {
  std::vector<MeasurementPair> out;
  for (const MeasurementPair& p : pairs) {
    if (p.a.velocity.norm() >= min_speed && p.b.velocity.norm() >= min_speed) out.push_back(p);
  }
  return out;
}

StreamEstimates estimate_stream(std::span<const RadarScan> scans, const RansacConfig& cfg) {
  StreamEstimates out;
  for (const RadarScan& scan : scans) {
    try {
      out.estimates.push_back(ransac_ego_velocity(scan, cfg));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidArgument) throw;
      ++out.skipped;
    }
  }
  return out;
}

std::vector<MeasurementPair> pairs_from_scans(std::span<const RadarScan> scans_a,
                                              std::span<const RadarScan> scans_b,
                                              const PipelineConfig& cfg) {
  cfg.validate();
  const StreamEstimates a = estimate_stream(scans_a, cfg.ransac);
  const StreamEstimates b = estimate_stream(scans_b, cfg.ransac);
  const auto pairs = synchronize(a.estimates, b.estimates, cfg.sync_max_gap);
  return filter_pairs(pairs, cfg.min_speed);
}

}  // namespace rrcal
