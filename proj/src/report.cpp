#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "rrcal/error.hpp"
#include "rrcal/pipeline_io.hpp"

namespace rrcal {
namespace {

using Json = nlohmann::ordered_json;

// JSON has no inf/nan; a flat direction yields an infinite covariance.
Json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::kParse, "report: bad number '" + s + "'");
  }
  return j.get<double>();
}

Json mat(const Mat2& m) {
  return Json::array({Json::array({real(m(0, 0)), real(m(0, 1))}),
                      Json::array({real(m(1, 0)), real(m(1, 1))})});
}

Mat2 mat(const Json& j) {
  Mat2 m;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) m(r, c) = real(j.at(r).at(c));
  }
  return m;
}

Json reals(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(real(x));
  return out;
}

std::vector<double> reals(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(real(x));
  return out;
}

Json extrinsics(const Extrinsics& e) {
  return {{"theta_t", real(e.theta_t)}, {"theta_ba", real(e.theta_ba)}};
}

Extrinsics extrinsics(const Json& j) {
  return {real(j.at("theta_t")), real(j.at("theta_ba"))};
}

// Empirical quantiles of an error series, for distribution plots.
Json quantile_table(std::vector<double> v) {
  Json rows = Json::array();
  if (v.empty()) return rows;
  std::sort(v.begin(), v.end());
  for (double q : {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0}) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    rows.push_back({q, real((1.0 - w) * v[lo] + w * v[hi])});
  }
  return rows;
}

}  // namespace

void write_report(const ReportDocument& doc, const std::filesystem::path& path) {
  const CalibrationReport& r = doc.report;
  Json j;
  j["schema"] = "rrcal-report";
  j["version"] = 1;
  j["converged"] = r.converged;
  j["extrinsics"] = extrinsics(r.extrinsics);
  j["initial_extrinsics"] = extrinsics(r.initial_extrinsics);
  j["extrinsic_covariance"] = mat(r.extrinsic_covariance);
  j["extrinsic_information"] = mat(r.extrinsic_information);
  j["flat_direction"] = r.flat_direction;
  j["initial_cost"] = real(r.initial_cost);
  j["final_cost"] = real(r.final_cost);
  j["iterations"] = r.iterations;
  j["cost_history"] = reals(r.cost_history);

  const ExcitationReport& ex = r.excitation;
  j["excitation"] = {{"fraction_degenerate", real(ex.fraction_degenerate)},
                     {"min_abs_det", real(ex.min_abs_det)},
                     {"mean_abs_det", real(ex.mean_abs_det)},
                     {"det_threshold", real(ex.det_threshold)},
                     {"sample_count", ex.sample_count},
                     {"flags",
                      {{"zero_alpha", ex.flags.zero_alpha},
                       {"zero_velocity", ex.flags.zero_velocity},
                       {"axis_aligned_motion", ex.flags.axis_aligned_motion}}}};

  j["residuals"] = {{"whitened_rms", real(r.residuals.whitened_rms)},
                    {"rms_error_a", real(r.residuals.rms_error_a)},
                    {"rms_error_b", real(r.residuals.rms_error_b)}};
  j["mean_velocity_error"] = real(r.mean_velocity_error);

  Json motion = Json::array();
  for (std::size_t k = 0; k < r.fused_motion.size(); ++k) {
    const MotionState& m = r.fused_motion[k];
    motion.push_back({real(k < r.timestamps.size() ? r.timestamps[k] : 0.0),
                      k < r.pair_indices.size() ? r.pair_indices[k] : 0, real(m.v_a.x()),
                      real(m.v_a.y()), real(m.omega_gamma)});
  }
  j["fused_motion_columns"] = {"timestamp", "pair_index", "vx", "vy", "omega_gamma"};
  j["fused_motion"] = std::move(motion);

  const FusedVelocityErrors& e = doc.velocity_errors;
  j["velocity_errors"] = {{"raw_a", reals(e.raw_a)},
                          {"fused_a", reals(e.fused_a)},
                          {"raw_b", reals(e.raw_b)},
                          {"fused_b", reals(e.fused_b)}};
  j["velocity_error_quantiles"] = {{"raw_a", quantile_table(e.raw_a)},
                                   {"fused_a", quantile_table(e.fused_a)},
                                   {"raw_b", quantile_table(e.raw_b)},
                                   {"fused_b", quantile_table(e.fused_b)}};

  Json cfg = Json::object();
  for (const auto& [k, v] : doc.config) cfg[k] = v;
  j["config"] = std::move(cfg);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

ReportDocument read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  ReportDocument doc;
  CalibrationReport& r = doc.report;
  try {
    const Json j = Json::parse(in);
    if (j.at("schema") != "rrcal-report" || j.at("version") != 1) {
      throw Error(ErrorCode::kParse, "unsupported report schema in " + path.string());
    }
    r.converged = j.at("converged").get<bool>();
    r.extrinsics = extrinsics(j.at("extrinsics"));
    r.initial_extrinsics = extrinsics(j.at("initial_extrinsics"));
    r.extrinsic_covariance = mat(j.at("extrinsic_covariance"));
    r.extrinsic_information = mat(j.at("extrinsic_information"));
    r.flat_direction = j.at("flat_direction").get<bool>();
    r.initial_cost = real(j.at("initial_cost"));
    r.final_cost = real(j.at("final_cost"));
    r.iterations = j.at("iterations").get<std::size_t>();
    r.cost_history = reals(j.at("cost_history"));

    const Json& ex = j.at("excitation");
    r.excitation.fraction_degenerate = real(ex.at("fraction_degenerate"));
    r.excitation.min_abs_det = real(ex.at("min_abs_det"));
    r.excitation.mean_abs_det = real(ex.at("mean_abs_det"));
    r.excitation.det_threshold = real(ex.at("det_threshold"));
    r.excitation.sample_count = ex.at("sample_count").get<std::size_t>();
    r.excitation.flags.zero_alpha = ex.at("flags").at("zero_alpha").get<bool>();
    r.excitation.flags.zero_velocity = ex.at("flags").at("zero_velocity").get<bool>();
    r.excitation.flags.axis_aligned_motion = ex.at("flags").at("axis_aligned_motion").get<bool>();

    r.residuals.whitened_rms = real(j.at("residuals").at("whitened_rms"));
    r.residuals.rms_error_a = real(j.at("residuals").at("rms_error_a"));
    r.residuals.rms_error_b = real(j.at("residuals").at("rms_error_b"));
    r.mean_velocity_error = real(j.at("mean_velocity_error"));

    for (const auto& row : j.at("fused_motion")) {
      r.timestamps.push_back(real(row.at(0)));
      r.pair_indices.push_back(row.at(1).get<std::size_t>());
      r.fused_motion.push_back({{real(row.at(2)), real(row.at(3))}, real(row.at(4))});
    }

    const Json& e = j.at("velocity_errors");
    doc.velocity_errors.raw_a = reals(e.at("raw_a"));
    doc.velocity_errors.fused_a = reals(e.at("fused_a"));
    doc.velocity_errors.raw_b = reals(e.at("raw_b"));
    doc.velocity_errors.fused_b = reals(e.at("fused_b"));

    for (const auto& [k, v] : j.at("config").items()) doc.config.emplace_back(k, v.get<std::string>());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, path.string() + ": " + ex.what());
  }
  return doc;
}

}  // namespace rrcal
