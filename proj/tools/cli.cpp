#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "rrcal/calibration_model.hpp"
#include "rrcal/error.hpp"
#include "rrcal/identifiability.hpp"
#include "rrcal/initialization.hpp"
#include "rrcal/pipeline_io.hpp"

namespace rrcal::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json json_real(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

Json config_json(const PipelineConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

Json excitation_json(const ExcitationReport& r) {
  return {{"fraction_degenerate", r.fraction_degenerate},
          {"min_abs_det", json_real(r.min_abs_det)},
          {"mean_abs_det", json_real(r.mean_abs_det)},
          {"det_threshold", json_real(r.det_threshold)},
          {"sample_count", r.sample_count},
          {"flags",
           {{"zero_alpha", r.flags.zero_alpha},
            {"zero_velocity", r.flags.zero_velocity},
            {"axis_aligned_motion", r.flags.axis_aligned_motion}}}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads; the first exception wins.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

PipelineConfig resolve_config(const std::string& path) {
  PipelineConfig cfg;
  if (!path.empty()) cfg = load_config(path);
  return cfg;
}

struct PairInput {
  std::string pairs;
  std::string scans;
  std::string radar_a = "a";
  std::string radar_b = "b";
};

void add_pair_input(CLI::App* cmd, PairInput& in) {
  auto* pairs = cmd->add_option("--pairs", in.pairs, "Synchronized pair file");
  auto* scans = cmd->add_option("--scans", in.scans, "Raw scan file (RANSAC + synchronization)");
  pairs->excludes(scans);
  cmd->add_option("--radar-a", in.radar_a, "Radar id of the reference radar in --scans")
      ->capture_default_str();
  cmd->add_option("--radar-b", in.radar_b, "Radar id of the second radar in --scans")
      ->capture_default_str();
}

std::vector<MeasurementPair> load_pair_input(const PairInput& in, const PipelineConfig& cfg) {
  if (in.pairs.empty() && in.scans.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "one of --pairs or --scans is required");
  }
  if (!in.pairs.empty()) return filter_pairs(load_pairs(in.pairs), cfg.min_speed);
  const ScanStreamMap streams = load_scans(in.scans);
  const auto a = streams.find(in.radar_a);
  const auto b = streams.find(in.radar_b);
  if (a == streams.end() || b == streams.end()) {
    throw Error(ErrorCode::kParse, in.scans + ": no scans for radar '" +
                                       (a == streams.end() ? in.radar_a : in.radar_b) + "'");
  }
  return pairs_from_scans(a->second, b->second, cfg);
}

/// Truth velocities matched to pair timestamps.
std::vector<RadarVelocityTruth> truth_for_pairs(const GroundTruth& truth,
                                                std::span<const MeasurementPair> pairs) {
  std::vector<RadarVelocityTruth> out;
  out.reserve(pairs.size());
  std::size_t k = 0;
  for (const MeasurementPair& p : pairs) {
    while (k + 1 < truth.samples.size() &&
           std::abs(truth.samples[k + 1].t - p.timestamp) <= std::abs(truth.samples[k].t - p.timestamp)) {
      ++k;
    }
    if (truth.samples.empty() || std::abs(truth.samples[k].t - p.timestamp) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument,
                  "truth has no sample at pair timestamp " + fmt(p.timestamp));
    }
    out.push_back(truth.radar_velocities(k));
  }
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidWeight:
      return kUsage;
    case ErrorCode::kIo:
      return kIoError;
    case ErrorCode::kParse:
      return kParseFailure;
    case ErrorCode::kUnidentifiable:
    case ErrorCode::kInsufficientExcitation:
      return kUnidentifiable;
    case ErrorCode::kNoConsensus:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kDegenerateGeometry:
      return kNoConsensus;
  }
  return kFailure;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::size_t> trials;
  std::vector<double> sigmas;
  std::vector<double> durations;
  std::optional<double> rate;
  std::optional<std::uint64_t> seed;
  std::string profile = "periodic";
  std::vector<double> translation{0.9, 1.2};
  double theta_ba = 1.2;
  std::vector<double> velocity{1.0, 0.3};
  double omega = 0.4;
  bool no_scans = false;
  double detection_sigma = 0.02;
  double outlier_fraction = 0.0;
  std::size_t landmarks = 150;
  double rate_noise = 0.02;
  double heading_noise = 0.01;
  std::size_t jobs = 1;
};

TrajectoryKind parse_profile(const std::string& name) {
  if (name == "periodic") return TrajectoryKind::kPeriodicDefault;
  if (name == "constant-omega") return TrajectoryKind::kConstantOmega;
  if (name == "straight-line") return TrajectoryKind::kStraightLine;
  throw Error(ErrorCode::kInvalidArgument, "unknown profile '" + name + "'");
}

void simulate_trial(const SimulateArgs& args, const TrajectoryProfile& profile, double sigma,
                    std::uint64_t seed, const fs::path& dir) {
  ensure_dir(dir);
  const GroundTruth truth = generate_trajectory(profile);
  NoiseSpec noise;
  noise.sigma_r = sigma;
  noise.rng_seed = seed;
  write_pairs(dir / "pairs.csv", simulate_pairs(truth, noise));
  write_truth(dir / "truth.json", truth);

  std::mt19937_64 rng(seed ^ 0x5ca1ab1eULL);
  std::normal_distribution<double> normal;
  AngularRateSeries rates;
  rates.source = "gyro";
  for (const TruthSample& s : truth.samples) {
    rates.timestamps.push_back(s.t);
    rates.omega_ref.push_back(s.omega + args.rate_noise * normal(rng));
  }
  write_angular_rates(dir / "rates.csv", rates);
  std::vector<HeadingSample> headings;
  const std::vector<Pose2> poses = integrate_poses(truth);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    headings.push_back({truth.samples[k].t, wrap_pi(poses[k].heading + args.heading_noise * normal(rng))});
  }
  write_headings(dir / "headings.csv", headings);

  if (!args.no_scans) {
    LandmarkSpec spec;
    spec.count = args.landmarks;
    spec.seed = seed ^ 0x1a2dULL;
    const auto landmarks = make_landmarks(truth, spec);
    NoiseSpec scan_noise;
    scan_noise.detection_range_rate_sigma = args.detection_sigma;
    scan_noise.outlier_fraction = args.outlier_fraction;
    scan_noise.rng_seed = seed ^ 0x5ca45ULL;
    const ScanStreams scans = simulate_scans(truth, landmarks, scan_noise);
    std::vector<RadarScan> all;
    all.reserve(scans.a.size() + scans.b.size());
    for (std::size_t k = 0; k < scans.a.size(); ++k) {
      all.push_back(scans.a[k]);
      if (k < scans.b.size()) all.push_back(scans.b[k]);
    }
    write_scans(dir / "scans.csv", all);
  }
}

int cmd_simulate(const SimulateArgs& args) {
  PipelineConfig cfg;
  ExperimentMatrix matrix;
  if (!args.config.empty()) {
    cfg = load_config(args.config);
    matrix = cfg.experiment;
  } else {
    // One quick trial unless asked for more.
    matrix.trials = 1;
    matrix.sigmas = {0.05};
    matrix.durations = {15.0};
  }
  if (args.trials) matrix.trials = *args.trials;
  if (!args.sigmas.empty()) matrix.sigmas = args.sigmas;
  if (!args.durations.empty()) matrix.durations = args.durations;
  if (args.rate) matrix.rate = *args.rate;
  if (args.seed) matrix.seed = *args.seed;
  cfg.experiment = matrix;
  cfg.validate();
  if (args.translation.size() != 2 || args.velocity.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "--translation and --velocity take two values");
  }

  TrajectoryProfile base;
  base.kind = parse_profile(args.profile);
  base.rate = matrix.rate;
  base.rig.translation = {args.translation[0], args.translation[1]};
  base.rig.theta_ba = args.theta_ba;
  base.velocity = {args.velocity[0], args.velocity[1]};
  base.omega = args.omega;

  struct Job {
    double sigma;
    double duration;
    std::size_t trial;
    std::uint64_t seed;
    fs::path dir;
  };
  std::vector<Job> jobs;
  Json cells = Json::array();
  const fs::path out = args.out;
  std::size_t cell = 0;
  for (double sigma : matrix.sigmas) {
    for (double duration : matrix.durations) {
      const fs::path cell_dir = out / ("sigma_" + fmt(sigma)) / ("duration_" + fmt(duration));
      Json trials = Json::array();
      for (std::size_t k = 0; k < matrix.trials; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03zu", k);
        const std::uint64_t seed = trial_seed(matrix.seed, cell, k);
        jobs.push_back({sigma, duration, k, seed, cell_dir / name});
        trials.push_back({{"dir", fs::relative(cell_dir / name, out).generic_string()}, {"seed", seed}});
      }
      cells.push_back({{"sigma", sigma}, {"duration", duration}, {"trials", std::move(trials)}});
      ++cell;
    }
  }

  ensure_dir(out);
  parallel_for(jobs.size(), args.jobs, [&](std::size_t i) {
    TrajectoryProfile profile = base;
    profile.duration = jobs[i].duration;
    simulate_trial(args, profile, jobs[i].sigma, jobs[i].seed, jobs[i].dir);
  });

  Json manifest;
  manifest["schema"] = "rrcal-simulation";
  manifest["version"] = 1;
  manifest["seed"] = matrix.seed;
  manifest["profile"] = {{"name", args.profile},
                         {"rate", matrix.rate},
                         {"translation", {base.rig.translation.x(), base.rig.translation.y()}},
                         {"theta_ba", base.rig.theta_ba},
                         {"velocity", {base.velocity.x(), base.velocity.y()}},
                         {"omega", base.omega}};
  manifest["scans"] = {{"enabled", !args.no_scans},
                       {"detection_sigma", args.detection_sigma},
                       {"outlier_fraction", args.outlier_fraction},
                       {"landmarks", args.landmarks}};
  manifest["reference_noise"] = {{"rate", args.rate_noise}, {"heading", args.heading_noise}};
  manifest["config"] = config_json(cfg);
  manifest["cells"] = std::move(cells);
  write_json(out / "manifest.json", manifest);
  std::cout << "wrote " << jobs.size() << " trials to " << out.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
  PairInput input;
  std::string config;
  std::string truth;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& args) {
  const PipelineConfig cfg = resolve_config(args.config);
  const auto pairs = load_pair_input(args.input, cfg);
  const fs::path out = args.out;
  ensure_dir(out);

  CalibrationReport report;
  try {
    report = solve_lm(pairs, cfg.solver);
  } catch (const UnidentifiableError& e) {
    Json j;
    j["schema"] = "rrcal-excitation";
    j["version"] = 1;
    j["identifiable"] = false;
    j["message"] = e.what();
    j["excitation"] = excitation_json(e.report());
    j["seed"] = cfg.ransac.rng_seed;
    j["config"] = config_json(cfg);
    write_json(out / "excitation.json", j);
    std::cerr << "rrcal: " << e.what() << '\n';
    return kUnidentifiable;
  }

  ReportDocument doc;
  doc.report = report;
  doc.config = config_entries(cfg);
  if (!args.truth.empty()) {
    const GroundTruth truth = load_truth(args.truth);
    doc.velocity_errors = fused_ego_velocities(report, pairs, VelocityReference::kGroundTruth,
                                               truth_for_pairs(truth, pairs));
  } else {
    doc.velocity_errors = fused_ego_velocities(report, pairs, VelocityReference::kModel);
  }
  write_report(doc, out / "report.json");
  std::cout << "theta_t " << num(report.extrinsics.theta_t) << " theta_ba "
            << num(report.extrinsics.theta_ba) << " converged " << report.converged << '\n';
  if (!report.converged) return kNotConverged;
  return kOk;
}

// ---------------------------------------------------------------------------
// excitation-check
// ---------------------------------------------------------------------------

struct ExcitationArgs {
  PairInput input;
  std::string config;
  std::string out;
};

int cmd_excitation_check(const ExcitationArgs& args) {
  const PipelineConfig cfg = resolve_config(args.config);
  const auto pairs = load_pair_input(args.input, cfg);
  const SolverOptions& opt = cfg.solver;

  std::size_t k = opt.rotation_pairs;
  if (k == 0) k = default_rotation_pairs(pairs.size());
  Extrinsics guess;
  guess.theta_ba = init_rotation(pairs, k, opt.init_min_speed);
  bool axis_initialized = true;
  try {
    guess.theta_t = init_translation_axis(pairs, guess.theta_ba, opt.init_min_lever);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientExcitation) throw;
    // No lever-arm signal at all; any axis gives the same verdict.
    guess.theta_t = 0.0;
    axis_initialized = false;
  }
  const ExcitationReport report = excitation_report(pairs, guess, opt.excitation);
  const bool identifiable = axis_initialized && report.fraction_degenerate <= opt.max_degenerate_fraction;

  const fs::path out = args.out;
  ensure_dir(out);
  Json j;
  j["schema"] = "rrcal-excitation";
  j["version"] = 1;
  j["identifiable"] = identifiable;
  j["extrinsics_guess"] = {{"theta_t", guess.theta_t}, {"theta_ba", guess.theta_ba}};
  j["axis_initialized"] = axis_initialized;
  j["excitation"] = excitation_json(report);
  j["seed"] = cfg.ransac.rng_seed;
  j["config"] = config_json(cfg);
  write_json(out / "excitation.json", j);
  std::cout << "fraction_degenerate " << num(report.fraction_degenerate) << " identifiable "
            << identifiable << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  PairInput input;
  std::string report;
  std::optional<double> theta_t;
  std::optional<double> theta_ba;
  std::string experiment;
  std::string config;
  std::string out;
  std::size_t jobs = 1;
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct TrialResult {
  bool ok = false;
  bool converged = false;
  double theta_t_error_deg = 0.0;
  double theta_ba_error_deg = 0.0;
  double raw_a = 0.0, fused_a = 0.0, raw_b = 0.0, fused_b = 0.0;
  double mean_velocity_error = 0.0;
  std::string failure;
};

TrialResult evaluate_trial(const fs::path& dir, const PipelineConfig& cfg) {
  TrialResult r;
  const auto pairs = filter_pairs(load_pairs(dir / "pairs.csv"), cfg.min_speed);
  const GroundTruth truth = load_truth(dir / "truth.json");
  try {
    const CalibrationReport report = solve_lm(pairs, cfg.solver);
    const Extrinsics ex = truth.extrinsics();
    r.ok = true;
    r.converged = report.converged;
    r.theta_t_error_deg = axis_distance(report.extrinsics.theta_t, ex.theta_t) * 180.0 / kPi;
    r.theta_ba_error_deg = angle_distance(report.extrinsics.theta_ba, ex.theta_ba) * 180.0 / kPi;
    r.mean_velocity_error = report.mean_velocity_error;
    const auto errs = fused_ego_velocities(report, pairs, VelocityReference::kGroundTruth,
                                           truth_for_pairs(truth, pairs));
    r.raw_a = median(errs.raw_a);
    r.fused_a = median(errs.fused_a);
    r.raw_b = median(errs.raw_b);
    r.fused_b = median(errs.fused_b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo || e.code() == ErrorCode::kParse) throw;
    r.failure = to_string(e.code());
  }
  return r;
}

int cmd_evaluate_experiment(const EvaluateArgs& args, const PipelineConfig& cfg) {
  const fs::path root = args.experiment;
  const Json manifest = read_json(root / "manifest.json");
  const fs::path out = args.out;
  ensure_dir(out / "errors");

  struct Item {
    std::size_t cell;
    fs::path dir;
  };
  std::vector<Item> items;
  std::vector<std::pair<double, double>> cells;
  try {
    for (const auto& c : manifest.at("cells")) {
      cells.emplace_back(c.at("sigma").get<double>(), c.at("duration").get<double>());
      for (const auto& t : c.at("trials")) {
        items.push_back({cells.size() - 1, root / t.at("dir").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "manifest: " + std::string(e.what()));
  }

  std::vector<TrialResult> results(items.size());
  parallel_for(items.size(), args.jobs,
               [&](std::size_t i) { results[i] = evaluate_trial(items[i].dir, cfg); });

  std::ofstream summary(out / "summary.csv", std::ios::binary);
  if (!summary) throw Error(ErrorCode::kIo, "cannot write summary.csv");
  summary << "sigma,duration,trials,failed,unconverged,median_theta_t_deg,median_theta_ba_deg,"
             "p95_theta_t_deg,p95_theta_ba_deg,median_raw_a,median_fused_a,median_raw_b,"
             "median_fused_b,median_velocity_error\n";
  Json cell_json = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto [sigma, duration] = cells[c];
    const std::string name = "sigma_" + fmt(sigma) + "_duration_" + fmt(duration) + ".csv";
    std::ofstream table(out / "errors" / name, std::ios::binary);
    if (!table) throw Error(ErrorCode::kIo, "cannot write " + name);
    table << "trial,ok,converged,theta_t_error_deg,theta_ba_error_deg,raw_a,fused_a,raw_b,fused_b,"
             "mean_velocity_error\n";
    std::vector<double> et, eb, ra, fa, rb, fb, mv;
    std::size_t n = 0, failed = 0, unconverged = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].cell != c) continue;
      const TrialResult& r = results[i];
      table << n++ << ',' << r.ok << ',' << r.converged << ',' << fmt(r.theta_t_error_deg) << ','
            << fmt(r.theta_ba_error_deg) << ',' << fmt(r.raw_a) << ',' << fmt(r.fused_a) << ','
            << fmt(r.raw_b) << ',' << fmt(r.fused_b) << ',' << fmt(r.mean_velocity_error) << '\n';
      if (!r.ok) {
        ++failed;
        continue;
      }
      if (!r.converged) ++unconverged;
      et.push_back(r.theta_t_error_deg);
      eb.push_back(r.theta_ba_error_deg);
      ra.push_back(r.raw_a);
      fa.push_back(r.fused_a);
      rb.push_back(r.raw_b);
      fb.push_back(r.fused_b);
      mv.push_back(r.mean_velocity_error);
    }
    summary << fmt(sigma) << ',' << fmt(duration) << ',' << n << ',' << failed << ','
            << unconverged << ',' << fmt(median(et)) << ',' << fmt(median(eb)) << ','
            << fmt(quantile(et, 0.95)) << ',' << fmt(quantile(eb, 0.95)) << ',' << fmt(median(ra))
            << ',' << fmt(median(fa)) << ',' << fmt(median(rb)) << ',' << fmt(median(fb)) << ','
            << fmt(median(mv)) << '\n';
    cell_json.push_back({{"sigma", sigma},
                         {"duration", duration},
                         {"trials", n},
                         {"failed", failed},
                         {"unconverged", unconverged},
                         {"median_theta_t_error_deg", json_real(median(et))},
                         {"median_theta_ba_error_deg", json_real(median(eb))},
                         {"median_raw_a", json_real(median(ra))},
                         {"median_fused_a", json_real(median(fa))},
                         {"median_raw_b", json_real(median(rb))},
                         {"median_fused_b", json_real(median(fb))}});
  }
  summary.flush();
  if (!summary) throw Error(ErrorCode::kIo, "write failed for summary.csv");

  Json j;
  j["schema"] = "rrcal-evaluation";
  j["version"] = 1;
  j["mode"] = "experiment";
  j["experiment"] = root.string();
  j["seed"] = manifest.value("seed", std::uint64_t{0});
  j["config"] = config_json(cfg);
  j["cells"] = std::move(cell_json);
  write_json(out / "evaluation.json", j);
  std::cout << "evaluated " << items.size() << " trials\n";
  return kOk;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const PipelineConfig cfg = resolve_config(args.config);
  if (!args.experiment.empty()) return cmd_evaluate_experiment(args, cfg);

  Extrinsics ex;
  if (!args.report.empty()) {
    if (args.theta_t || args.theta_ba) {
      throw Error(ErrorCode::kInvalidArgument, "--report excludes --theta-t/--theta-ba");
    }
    ex = read_report(args.report).report.extrinsics;
  } else if (args.theta_t && args.theta_ba) {
    ex = {*args.theta_t, *args.theta_ba};
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "evaluate needs --experiment, --report, or both --theta-t and --theta-ba");
  }
  const auto pairs = load_pair_input(args.input, cfg);
  const auto errors = velocity_errors(pairs, ex);

  const fs::path out = args.out;
  ensure_dir(out);
  Json j;
  j["schema"] = "rrcal-evaluation";
  j["version"] = 1;
  j["mode"] = "pairs";
  j["extrinsics"] = {{"theta_t", ex.theta_t}, {"theta_ba", ex.theta_ba}};
  j["pair_count"] = pairs.size();
  j["mean_velocity_error"] = velocity_error_metric(pairs, ex);
  j["median_velocity_error"] = json_real(median(errors));
  j["p95_velocity_error"] = json_real(quantile(errors, 0.95));
  j["seed"] = cfg.ransac.rng_seed;
  j["config"] = config_json(cfg);
  write_json(out / "evaluation.json", j);
  std::cout << "mean_velocity_error " << num(velocity_error_metric(pairs, ex)) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// recover-scale
// ---------------------------------------------------------------------------

struct ScaleArgs {
  std::string report;
  std::string rates;
  std::string poses;
  double min_rate = kDefaultMinRate;
  double heading_sigma = HeadingSmootherConfig{}.heading_sigma;
  double jerk_psd = HeadingSmootherConfig{}.jerk_psd;
  std::string out;
};

int cmd_recover_scale(const ScaleArgs& args) {
  const ReportDocument doc = read_report(args.report);
  AngularRateSeries ref;
  if (!args.rates.empty()) {
    ref = load_angular_rates(args.rates);
  } else if (!args.poses.empty()) {
    const auto headings = load_headings(args.poses);
    ref = smooth_angular_rate_from_poses(headings, {}, {args.heading_sigma, args.jerk_psd});
  } else {
    throw Error(ErrorCode::kInvalidArgument, "one of --rates or --poses is required");
  }
  const ScaleResult result = recover_scale(doc.report, ref, args.min_rate);

  const fs::path out = args.out;
  ensure_dir(out);
  Json j;
  j["schema"] = "rrcal-scale";
  j["version"] = 1;
  j["translation_magnitude"] = result.translation_magnitude;
  j["gamma"] = result.gamma;
  j["n_samples_used"] = result.n_samples_used;
  j["sign_ambiguous"] = result.sign_ambiguous;
  j["reference_source"] = ref.source;
  j["min_rate"] = args.min_rate;
  Json report_cfg = Json::object();
  for (const auto& [k, v] : doc.config) report_cfg[k] = v;
  j["config"] = std::move(report_cfg);
  write_json(out / "scale.json", j);
  std::cout << "translation_magnitude " << num(result.translation_magnitude) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Extrinsic calibration of two planar Doppler radars from ego-velocities", "rrcal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rrcal 1.0");
  app.footer(
      "Exit codes: 0 ok, 1 failure, 2 usage, 3 I/O, 4 parse, 5 unidentifiable,\n"
      "6 no consensus or insufficient data, 7 not converged.");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated experiment matrix");
  simulate->add_option("--config", sim.config, "Config file; its experiment.* keys set the matrix");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--trials", sim.trials, "Trials per cell (default 1)");
  simulate->add_option("--sigma", sim.sigmas, "Ego-velocity noise levels, m/s (default 0.05)")
      ->delimiter(',');
  simulate->add_option("--duration", sim.durations, "Durations, s (default 15)")->delimiter(',');
  simulate->add_option("--rate", sim.rate, "Sample rate, Hz (default 20)");
  simulate->add_option("--seed", sim.seed, "Base seed (default 1)");
  simulate->add_option("--profile", sim.profile, "periodic | constant-omega | straight-line")
      ->capture_default_str();
  simulate->add_option("--translation", sim.translation, "Radar b origin in radar a frame, m")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  simulate->add_option("--theta-ba", sim.theta_ba, "Rotation between the radars, rad")
      ->capture_default_str();
  simulate->add_option("--velocity", sim.velocity, "Body velocity for constant profiles, m/s")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  simulate->add_option("--omega", sim.omega, "Angular rate for constant-omega, rad/s")
      ->capture_default_str();
  simulate->add_flag("--no-scans", sim.no_scans, "Skip detection-level scan files");
  simulate->add_option("--detection-sigma", sim.detection_sigma, "Range-rate noise, m/s")
      ->capture_default_str();
  simulate->add_option("--outlier-fraction", sim.outlier_fraction, "Gross outliers per scan")
      ->capture_default_str();
  simulate->add_option("--landmarks", sim.landmarks, "Static landmarks")->capture_default_str();
  simulate->add_option("--rate-noise", sim.rate_noise, "Reference gyro noise, rad/s")
      ->capture_default_str();
  simulate->add_option("--heading-noise", sim.heading_noise, "Reference heading noise, rad")
      ->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "Parallel trials")->capture_default_str();

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate the extrinsics");
  add_pair_input(calibrate, cal.input);
  calibrate->add_option("--config", cal.config, "Config file");
  calibrate->add_option("--truth", cal.truth, "Ground truth for fused-velocity errors");
  calibrate->add_option("--out", cal.out, "Output directory")->required();

  ExcitationArgs exc;
  auto* excitation = app.add_subcommand("excitation-check", "Report trajectory excitation");
  add_pair_input(excitation, exc.input);
  excitation->add_option("--config", exc.config, "Config file");
  excitation->add_option("--out", exc.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Velocity-error metric or experiment tables");
  add_pair_input(evaluate, ev.input);
  evaluate->add_option("--report", ev.report, "Calibration report with the extrinsics");
  evaluate->add_option("--theta-t", ev.theta_t, "Translation axis, rad");
  evaluate->add_option("--theta-ba", ev.theta_ba, "Rotation, rad");
  evaluate->add_option("--experiment", ev.experiment, "Directory written by simulate");
  evaluate->add_option("--config", ev.config, "Config file");
  evaluate->add_option("--jobs", ev.jobs, "Parallel trials")->capture_default_str();
  evaluate->add_option("--out", ev.out, "Output directory")->required();

  ScaleArgs sc;
  auto* scale = app.add_subcommand("recover-scale", "Metric translation from a reference rate");
  scale->add_option("--report", sc.report, "Calibration report")->required();
  auto* rates = scale->add_option("--rates", sc.rates, "Reference angular-rate file");
  auto* poses = scale->add_option("--poses", sc.poses, "Reference heading file");
  rates->excludes(poses);
  scale->add_option("--min-rate", sc.min_rate, "Ignore samples below this rate, rad/s")
      ->capture_default_str();
  scale->add_option("--heading-sigma", sc.heading_sigma, "Heading noise for --poses, rad")
      ->capture_default_str();
  scale->add_option("--jerk-psd", sc.jerk_psd, "Angular jerk PSD for --poses")
      ->capture_default_str();
  scale->add_option("--out", sc.out, "Output directory")->required();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*calibrate) return cmd_calibrate(cal);
    if (*excitation) return cmd_excitation_check(exc);
    if (*evaluate) return cmd_evaluate(ev);
    if (*scale) return cmd_recover_scale(sc);
  } catch (const Error& e) {
    std::cerr << "rrcal: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rrcal: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace rrcal::cli
