#pragma once

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rrcal/ego_velocity.hpp"
#include "rrcal/scale_recovery.hpp"
#include "rrcal/simulator.hpp"
#include "rrcal/solver.hpp"

namespace rrcal {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentMatrix {
  std::size_t trials = 100;
  std::vector<double> sigmas{0.05, 0.1, 0.2};
  std::vector<double> durations{15.0, 30.0, 60.0, 120.0};
  double rate = 20.0;
  std::uint64_t seed = 1;
};

struct PipelineConfig {
  RansacConfig ransac;
  double min_speed = 0.05;     // m/s, zero-velocity filter
  double sync_max_gap = 0.2;   // s, largest bracketing gap bridged by interpolation
  SolverOptions solver;
  ExperimentMatrix experiment;

  void validate() const;
};

/// "key = value" lines; '#' starts a comment. Unknown keys are a parse error.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);
/// Every key with its resolved value, in a stable order.
std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg);
std::string format_config(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Text formats. Numbers use the shortest representation that round-trips.
//
// scans:    "#rrcal-scans v1", then per scan
//           timestamp,radar_id[,range,azimuth,range_rate]...
// pairs:    "#rrcal-pairs v1", then per pair
//           timestamp,ax,ay,a_cxx,a_cxy,a_cyy,a_inliers,a_total,
//           bx,by,b_cxx,b_cxy,b_cyy,b_inliers,b_total
// rates:    "#rrcal-rates v1,<source>", then timestamp,omega
// headings: "#rrcal-headings v1", then timestamp,heading
//
// Blank lines and lines starting with "#" after the header are ignored.
// ---------------------------------------------------------------------------

using ScanStreamMap = std::map<std::string, std::vector<RadarScan>>;

void write_scans(std::ostream& out, std::span<const RadarScan> scans);
void write_scans(const std::filesystem::path& path, std::span<const RadarScan> scans);
/// Streams keyed by radar id, each sorted by timestamp. Duplicate
/// (radar_id, timestamp) records are rejected.
ScanStreamMap parse_scans(std::istream& in);
ScanStreamMap load_scans(const std::filesystem::path& path);

void write_pairs(std::ostream& out, std::span<const MeasurementPair> pairs);
void write_pairs(const std::filesystem::path& path, std::span<const MeasurementPair> pairs);
std::vector<MeasurementPair> parse_pairs(std::istream& in);
std::vector<MeasurementPair> load_pairs(const std::filesystem::path& path);

void write_angular_rates(const std::filesystem::path& path, const AngularRateSeries& series);
AngularRateSeries parse_angular_rates(std::istream& in);
AngularRateSeries load_angular_rates(const std::filesystem::path& path);

void write_headings(const std::filesystem::path& path, std::span<const HeadingSample> samples);
std::vector<HeadingSample> parse_headings(std::istream& in);
std::vector<HeadingSample> load_headings(const std::filesystem::path& path);

/// Ground truth as JSON (schema "rrcal-truth", version 1).
void write_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth load_truth(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synchronization and filtering
// ---------------------------------------------------------------------------

/// Streaming synchronizer: radar b estimates are interpolated linearly onto
/// radar a's timestamps. An a sample is emitted once a b sample at or after
/// it has arrived; a samples outside b's span or in a gap wider than max_gap
/// are dropped. The interpolated covariance is the bracketing endpoint
/// covariance with the larger trace. Output does not depend on how the
/// input is chunked.
class Synchronizer {
 public:
  explicit Synchronizer(double max_gap);

  void push_a(const EgoVelocityEstimate& estimate);
  void push_b(const EgoVelocityEstimate& estimate);
  /// Pairs that can be decided with the data seen so far.
  std::vector<MeasurementPair> drain();
  /// Flush at end of input; undecidable a samples are dropped.
  std::vector<MeasurementPair> finish();

 private:
  double max_gap_;
  std::deque<EgoVelocityEstimate> pending_a_;
  std::deque<EgoVelocityEstimate> b_;
  std::vector<MeasurementPair> ready_;
  bool finished_ = false;
};

std::vector<MeasurementPair> synchronize(std::span<const EgoVelocityEstimate> stream_a,
                                         std::span<const EgoVelocityEstimate> stream_b,
                                         double max_gap);

/// Keeps pairs with |h_a| >= min_speed and |h_b| >= min_speed.
std::vector<MeasurementPair> filter_pairs(std::span<const MeasurementPair> pairs,
                                          double min_speed);

struct StreamEstimates {
  std::vector<EgoVelocityEstimate> estimates;
  std::size_t skipped = 0;  // scans without a usable estimate
};

/// RANSAC on every scan; scans that fail are skipped and counted.
StreamEstimates estimate_stream(std::span<const RadarScan> scans, const RansacConfig& cfg);

/// RANSAC, synchronization and zero-velocity filtering with the config defaults.
std::vector<MeasurementPair> pairs_from_scans(std::span<const RadarScan> scans_a,
                                             std::span<const RadarScan> scans_b,
                                             const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Reports (JSON, schema "rrcal-report", version 1)
// ---------------------------------------------------------------------------

struct ReportDocument {
  CalibrationReport report;
  std::vector<std::pair<std::string, std::string>> config;
  /// Plot-ready raw/fused error magnitudes per fused timestep (may be empty).
  FusedVelocityErrors velocity_errors;

  bool operator==(const ReportDocument&) const = default;
};

void write_report(const ReportDocument& doc, const std::filesystem::path& path);
ReportDocument read_report(const std::filesystem::path& path);

}  // namespace rrcal
