#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rrcal/error.hpp"
#include "rrcal/pipeline_io.hpp"
#include "text_format.hpp"

namespace rrcal {
namespace {

using detail::format_double;

constexpr std::string_view kScanHeader = "#rrcal-scans v1";
constexpr std::string_view kPairHeader = "#rrcal-pairs v1";
constexpr std::string_view kRateHeader = "#rrcal-rates v1";
constexpr std::string_view kHeadingHeader = "#rrcal-headings v1";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

/// Iterates data records, validating the header line. Returns fields per line.
class RecordReader {
 public:
  RecordReader(std::istream& in, std::string_view header) : in_(in) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw ParseError(1, "missing header '" + std::string(header) + "'");
    }
    line_no_ = 1;
    const std::string_view text = detail::trim(line);
    if (text.substr(0, header.size()) != header) {
      throw ParseError(1, "expected header '" + std::string(header) + "'");
    }
    header_rest_ = std::string(text.substr(header.size()));
  }

  const std::string& header_rest() const { return header_rest_; }
  std::size_t line_number() const { return line_no_; }

  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const std::string_view text = detail::trim(line_);
      if (text.empty() || text.front() == '#') continue;
      fields = detail::split(text, ',');
      return true;
    }
    return false;
  }

  double real(std::string_view field, const char* what) const {
    double v = 0.0;
    if (!detail::parse_double(field, v)) {
      throw ParseError(line_no_, std::string("invalid ") + what + " '" + std::string(field) + "'");
    }
    return v;
  }

  std::size_t count(std::string_view field, const char* what) const {
    std::size_t v = 0;
    if (!detail::parse_integer(field, v)) {
      throw ParseError(line_no_, std::string("invalid ") + what + " '" + std::string(field) + "'");
    }
    return v;
  }

 private:
  std::istream& in_;
  std::string line_;
  std::string header_rest_;
  std::size_t line_no_ = 0;
};

bool valid_radar_id(std::string_view id) {
  return !id.empty() && std::none_of(id.begin(), id.end(), [](char c) {
    return c == ',' || c == ' ' || c == '\t' || c == '#' || c == '\n' || c == '\r';
  });
}

void write_estimate(std::ostream& out, const EgoVelocityEstimate& e) {
  out << ',' << format_double(e.velocity.x()) << ',' << format_double(e.velocity.y()) << ','
      << format_double(e.covariance(0, 0)) << ',' << format_double(e.covariance(0, 1)) << ','
      << format_double(e.covariance(1, 1)) << ',' << e.n_inliers << ',' << e.n_total;
}

EgoVelocityEstimate read_estimate(const RecordReader& r, std::span<const std::string_view> f,
                                  double timestamp) {
  EgoVelocityEstimate e;
  e.timestamp = timestamp;
  e.velocity = {r.real(f[0], "velocity"), r.real(f[1], "velocity")};
  const double cxy = r.real(f[3], "covariance");
  e.covariance << r.real(f[2], "covariance"), cxy, cxy, r.real(f[4], "covariance");
  e.n_inliers = r.count(f[5], "inlier count");
  e.n_total = r.count(f[6], "detection count");
  if (e.n_inliers > e.n_total) throw ParseError(r.line_number(), "inlier count exceeds total");
  return e;
}

}  // namespace

void write_scans(std::ostream& out, std::span<const RadarScan> scans) {
  out << kScanHeader << '\n';
  for (const RadarScan& s : scans) {
    if (!valid_radar_id(s.radar_id)) {
      throw Error(ErrorCode::kInvalidArgument, "invalid radar id '" + s.radar_id + "'");
    }
    out << format_double(s.timestamp) << ',' << s.radar_id;
    for (const Detection& d : s.detections) {
      out << ',' << format_double(d.range) << ',' << format_double(d.azimuth) << ','
          << format_double(d.range_rate);
    }
    out << '\n';
  }
}

void write_scans(const std::filesystem::path& path, std::span<const RadarScan> scans) {
  std::ofstream out = open_out(path);
  write_scans(out, scans);
  check_written(out, path);
}

ScanStreamMap parse_scans(std::istream& in) {
  RecordReader reader(in, kScanHeader);
  if (!detail::trim(reader.header_rest()).empty()) {
    throw ParseError(1, "unexpected text after scan header");
  }
  ScanStreamMap streams;
  std::set<std::pair<std::string, double>> seen;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() < 2 || (f.size() - 2) % 3 != 0) {
      throw ParseError(reader.line_number(),
                       "expected timestamp,radar_id followed by range,azimuth,range_rate triplets");
    }
    RadarScan scan;
    scan.timestamp = reader.real(f[0], "timestamp");
    scan.radar_id = std::string(detail::trim(f[1]));
    if (!valid_radar_id(scan.radar_id)) throw ParseError(reader.line_number(), "invalid radar id");
    for (std::size_t i = 2; i < f.size(); i += 3) {
      Detection d{reader.real(f[i], "range"), reader.real(f[i + 1], "azimuth"),
                  reader.real(f[i + 2], "range_rate")};
      if (!(d.range > 0.0) || !std::isfinite(d.azimuth) || !std::isfinite(d.range_rate)) {
        throw ParseError(reader.line_number(), "detection needs range > 0 and finite values");
      }
      scan.detections.push_back(d);
    }
    if (!seen.emplace(scan.radar_id, scan.timestamp).second) {
      throw ParseError(reader.line_number(), "duplicate record for radar '" + scan.radar_id +
                                                 "' at " + format_double(scan.timestamp));
    }
    streams[scan.radar_id].push_back(std::move(scan));
  }
  for (auto& [id, scans] : streams) {
    std::stable_sort(scans.begin(), scans.end(), [](const RadarScan& x, const RadarScan& y) {
      return x.timestamp < y.timestamp;
    });
  }
  return streams;
}

ScanStreamMap load_scans(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_scans(in);
}

void write_pairs(std::ostream& out, std::span<const MeasurementPair> pairs) {
  out << kPairHeader << '\n';
  for (const MeasurementPair& p : pairs) {
    out << format_double(p.timestamp);
    write_estimate(out, p.a);
    write_estimate(out, p.b);
    out << '\n';
  }
}

void write_pairs(const std::filesystem::path& path, std::span<const MeasurementPair> pairs) {
  std::ofstream out = open_out(path);
  write_pairs(out, pairs);
  check_written(out, path);
}

std::vector<MeasurementPair> parse_pairs(std::istream& in) {
  RecordReader reader(in, kPairHeader);
  std::vector<MeasurementPair> pairs;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 15) throw ParseError(reader.line_number(), "expected 15 fields");
    MeasurementPair p;
    p.timestamp = reader.real(f[0], "timestamp");
    p.a = read_estimate(reader, std::span(f).subspan(1, 7), p.timestamp);
    p.b = read_estimate(reader, std::span(f).subspan(8, 7), p.timestamp);
    if (!pairs.empty() && !(p.timestamp > pairs.back().timestamp)) {
      throw ParseError(reader.line_number(), "pair timestamps must increase");
    }
    pairs.push_back(p);
  }
  return pairs;
}

std::vector<MeasurementPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_pairs(in);
}

void write_angular_rates(const std::filesystem::path& path, const AngularRateSeries& series) {
  series.validate();
  if (!valid_radar_id(series.source) && !series.source.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "rate source must not contain separators");
  }
  std::ofstream out = open_out(path);
  out << kRateHeader << ',' << series.source << '\n';
  for (std::size_t i = 0; i < series.timestamps.size(); ++i) {
    out << format_double(series.timestamps[i]) << ',' << format_double(series.omega_ref[i]) << '\n';
  }
  check_written(out, path);
}

AngularRateSeries parse_angular_rates(std::istream& in) {
  RecordReader reader(in, kRateHeader);
  AngularRateSeries series;
  std::string_view rest = reader.header_rest();
  if (!rest.empty() && rest.front() == ',') rest.remove_prefix(1);
  series.source = std::string(detail::trim(rest));
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 2) throw ParseError(reader.line_number(), "expected timestamp,omega");
    const double t = reader.real(f[0], "timestamp");
    if (!series.timestamps.empty() && !(t > series.timestamps.back())) {
      throw ParseError(reader.line_number(), "timestamps must strictly increase");
    }
    series.timestamps.push_back(t);
    series.omega_ref.push_back(reader.real(f[1], "omega"));
  }
  return series;
}

AngularRateSeries load_angular_rates(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_angular_rates(in);
}

void write_headings(const std::filesystem::path& path, std::span<const HeadingSample> samples) {
  std::ofstream out = open_out(path);
  out << kHeadingHeader << '\n';
  for (const HeadingSample& s : samples) {
    out << format_double(s.t) << ',' << format_double(s.heading) << '\n';
  }
  check_written(out, path);
}

std::vector<HeadingSample> parse_headings(std::istream& in) {
  RecordReader reader(in, kHeadingHeader);
  std::vector<HeadingSample> samples;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 2) throw ParseError(reader.line_number(), "expected timestamp,heading");
    samples.push_back({reader.real(f[0], "timestamp"), reader.real(f[1], "heading")});
  }
  return samples;
}

std::vector<HeadingSample> load_headings(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_headings(in);
}

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["schema"] = "rrcal-truth";
  j["version"] = 1;
  j["translation"] = {truth.rig.translation.x(), truth.rig.translation.y()};
  j["theta_ba"] = truth.rig.theta_ba;
  const Extrinsics ex = truth.extrinsics();
  j["theta_t"] = ex.theta_t;
  j["omega_scale"] = truth.omega_scale();
  auto& samples = j["samples"] = nlohmann::ordered_json::array();
  for (const TruthSample& s : truth.samples) {
    samples.push_back({s.t, s.v_a.x(), s.v_a.y(), s.omega, s.alpha});
  }
  std::ofstream out = open_out(path);
  out << j.dump(1) << '\n';
  check_written(out, path);
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  GroundTruth truth;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("schema") != "rrcal-truth" || j.at("version") != 1) {
      throw Error(ErrorCode::kParse, "unsupported truth schema in " + path.string());
    }
    truth.rig.translation = {j.at("translation").at(0).get<double>(),
                             j.at("translation").at(1).get<double>()};
    truth.rig.theta_ba = j.at("theta_ba").get<double>();
    for (const auto& s : j.at("samples")) {
      truth.samples.push_back({s.at(0).get<double>(),
                               {s.at(1).get<double>(), s.at(2).get<double>()},
                               s.at(3).get<double>(),
                               s.at(4).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return truth;
}

}  // namespace rrcal
