#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "rrcal/calibration_model.hpp"
#include "rrcal/error.hpp"
#include "rrcal/pipeline_io.hpp"
#include "test_support.hpp"

namespace rrcal {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

EgoVelocityEstimate est(double t, double vx, double vy, double var = 0.01) {
  return testing::estimate(t, {vx, vy}, var);
}

ScanStreams small_scans() {
  TrajectoryProfile p;
  p.duration = 2.0;
  const GroundTruth t = generate_trajectory(p);
  NoiseSpec n;
  n.detection_range_rate_sigma = 0.03;
  n.outlier_fraction = 0.1;
  n.rng_seed = 8;
  return simulate_scans(t, make_landmarks(t, {}), n);
}

TEST(Scans, EmptyFileWithHeader) {
  std::istringstream in("#rrcal-scans v1\n");
  EXPECT_TRUE(parse_scans(in).empty());
}

TEST(Scans, RoundTrip) {
  const ScanStreams s = small_scans();
  std::vector<RadarScan> all(s.a);
  all.insert(all.end(), s.b.begin(), s.b.end());
  all.push_back({99.0, "c", {}});
  const auto dir = testing::temp_dir("scans_round_trip");
  write_scans(dir / "s.csv", all);
  const ScanStreamMap m = load_scans(dir / "s.csv");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("a"), s.a);
  EXPECT_EQ(m.at("b"), s.b);
  EXPECT_TRUE(m.at("c")[0].detections.empty());
  // Writing again reproduces the file byte for byte.
  std::vector<RadarScan> again(m.at("a"));
  again.insert(again.end(), m.at("b").begin(), m.at("b").end());
  again.insert(again.end(), m.at("c").begin(), m.at("c").end());
  write_scans(dir / "t.csv", again);
  EXPECT_EQ(slurp(dir / "s.csv"), slurp(dir / "t.csv"));
}

TEST(Scans, MalformedLineReportsLineNumber) {
  std::ostringstream text;
  text << "#rrcal-scans v1\n";
  for (int i = 2; i < 42; ++i) text << 0.1 * i << ",a,5,0.1,-1\n";
  text << "4.2,a,5,0.1\n";  // incomplete triplet on line 42
  std::istringstream in(text.str());
  try {
    parse_scans(in);
    ADD_FAILURE();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 42u);
    EXPECT_NE(std::string(e.what()).find("line 42"), std::string::npos);
  }
}

TEST(Scans, RejectsDuplicatesAndBadInput) {
  std::istringstream dup("#rrcal-scans v1\n1,a,5,0,1\n1,b,5,0,1\n1,a,6,0,1\n");
  EXPECT_THROW(parse_scans(dup), ParseError);
  std::istringstream header("rrcal-scans v1\n");
  EXPECT_THROW(parse_scans(header), ParseError);
  std::istringstream range("#rrcal-scans v1\n1,a,-5,0,1\n");
  EXPECT_THROW(parse_scans(range), ParseError);
  std::istringstream number("#rrcal-scans v1\n1,a,5,zero,1\n");
  EXPECT_THROW(parse_scans(number), ParseError);
}

TEST(Scans, SortedPerRadarWithComments) {
  std::istringstream in("#rrcal-scans v1\n# note\n\n2,a,5,0,1\n1,a,5,0,2\n");
  const auto m = parse_scans(in);
  ASSERT_EQ(m.at("a").size(), 2u);
  EXPECT_EQ(m.at("a")[0].timestamp, 1.0);
}

TEST(Scans, MissingFile) {
  try {
    load_scans("/nonexistent/rrcal/scans.csv");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Pairs, RoundTrip) {
  TrajectoryProfile p;
  const GroundTruth t = generate_trajectory(p);
  NoiseSpec n;
  n.sigma_r = 0.1;
  n.rng_seed = 3;
  auto pairs = simulate_pairs(t, n);
  pairs[3].a.covariance(0, 1) = pairs[3].a.covariance(1, 0) = 1e-3 / 3.0;
  pairs[3].b.n_inliers = 7;
  pairs[3].b.n_total = 9;
  const auto dir = testing::temp_dir("pairs_round_trip");
  write_pairs(dir / "p.csv", pairs);
  EXPECT_EQ(load_pairs(dir / "p.csv"), pairs);
  std::istringstream bad("#rrcal-pairs v1\n0,1,2,3,4,5,6,7,8,9,10,11,12,13\n");
  EXPECT_THROW(parse_pairs(bad), ParseError);
  std::istringstream order("#rrcal-pairs v1\n1,1,0,1,0,1,3,3,1,0,1,0,1,3,3\n0,1,0,1,0,1,3,3,1,0,1,0,1,3,3\n");
  EXPECT_THROW(parse_pairs(order), ParseError);
}

TEST(RatesAndHeadings, RoundTrip) {
  const auto dir = testing::temp_dir("rates_round_trip");
  const AngularRateSeries s{{0.0, 0.05, 0.1}, {0.1, -1.0 / 3.0, 1e-300}, "gyro"};
  write_angular_rates(dir / "r.csv", s);
  EXPECT_EQ(load_angular_rates(dir / "r.csv"), s);
  const std::vector<HeadingSample> h{{0.0, 3.1}, {0.1, -3.1}, {0.2, 1.0 / 7.0}};
  write_headings(dir / "h.csv", h);
  EXPECT_EQ(load_headings(dir / "h.csv"), h);
  std::istringstream bad("#rrcal-rates v1,x\n1,0\n1,0\n");
  EXPECT_THROW(parse_angular_rates(bad), ParseError);
}

TEST(Truth, RoundTrip) {
  TrajectoryProfile p;
  p.rig.translation = {-0.3, 2.0 / 3.0};
  const GroundTruth t = generate_trajectory(p);
  const auto dir = testing::temp_dir("truth_round_trip");
  write_truth(dir / "t.json", t);
  const GroundTruth back = load_truth(dir / "t.json");
  EXPECT_EQ(back.rig.translation, t.rig.translation);
  EXPECT_EQ(back.rig.theta_ba, t.rig.theta_ba);
  ASSERT_EQ(back.samples.size(), t.samples.size());
  for (std::size_t j = 0; j < t.samples.size(); ++j) {
    EXPECT_EQ(back.samples[j].t, t.samples[j].t);
    EXPECT_EQ(back.samples[j].v_a, t.samples[j].v_a);
    EXPECT_EQ(back.samples[j].omega, t.samples[j].omega);
    EXPECT_EQ(back.samples[j].alpha, t.samples[j].alpha);
  }
}

TEST(Config, RoundTripAndErrors) {
  PipelineConfig cfg;
  cfg.min_speed = 0.07;
  cfg.ransac.rng_seed = 12345678901234ULL;
  cfg.solver.check_excitation = false;
  cfg.experiment.sigmas = {0.05, 0.2};
  std::istringstream in(format_config(cfg));
  const PipelineConfig back = parse_config(in);
  EXPECT_EQ(config_entries(back), config_entries(cfg));

  std::istringstream unknown("min_speed = 0.1\nbogus = 3\n");
  try {
    parse_config(unknown);
    ADD_FAILURE();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream negative("min_speed = -1\n");
  EXPECT_THROW(parse_config(negative), Error);
  std::istringstream comments("# defaults\n\nransac.max_iterations = 20  # fewer\n");
  EXPECT_EQ(parse_config(comments).ransac.max_iterations, 20u);
  EXPECT_EQ(PipelineConfig{}.min_speed, 0.05);
}

TEST(Synchronize, IdenticalTimestamps) {
  std::vector<EgoVelocityEstimate> a, b;
  for (int k = 0; k < 10; ++k) {
    a.push_back(est(0.1 * k, 1, k));
    b.push_back(est(0.1 * k, -1, 2 * k, 0.02));
  }
  const auto pairs = synchronize(a, b, 0.2);
  ASSERT_EQ(pairs.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(pairs[k].a, a[k]);
    EXPECT_EQ(pairs[k].b, b[k]);
    EXPECT_EQ(pairs[k].timestamp, a[k].timestamp);
  }
}

TEST(Synchronize, LinearRampAtMidpoints) {
  std::vector<EgoVelocityEstimate> a, b;
  for (int k = 0; k < 20; ++k) {
    a.push_back(est(0.1 * k + 0.05, 0, 0));
    b.push_back(est(0.1 * k, 0.5 + 2.0 * (0.1 * k), -1.0 * (0.1 * k), 0.01 + 0.001 * k));
  }
  const auto pairs = synchronize(a, b, 0.2);
  ASSERT_EQ(pairs.size(), 19u);  // the last a sample has no b after it
  for (const auto& p : pairs) {
    EXPECT_NEAR(p.b.velocity.x(), 0.5 + 2.0 * p.timestamp, 1e-12);
    EXPECT_NEAR(p.b.velocity.y(), -p.timestamp, 1e-12);
    EXPECT_EQ(p.b.timestamp, p.timestamp);
    // conservative: the later endpoint has the larger covariance here
    const int hi = static_cast<int>(std::ceil(p.timestamp / 0.1));
    EXPECT_EQ(p.b.covariance(0, 0), 0.01 + 0.001 * hi);
  }
}

TEST(Synchronize, GapDropped) {
  std::vector<EgoVelocityEstimate> a, b;
  for (int k = 0; k <= 40; ++k) a.push_back(est(0.05 * k, 1, 0));
  for (int k = 0; k <= 20; ++k) {
    const double t = 0.1 * k;
    if (t > 0.45 && t < 1.45) continue;  // b has a 1 s hole
    b.push_back(est(t, 1, 0));
  }
  const auto pairs = synchronize(a, b, 0.2);
  for (const auto& p : pairs) EXPECT_FALSE(p.timestamp > 0.4 + 1e-9 && p.timestamp < 1.5 - 1e-9);
  // 0 .. 0.35 and 1.55 .. 1.95 always pair; the boundary samples depend on rounding
  EXPECT_GE(pairs.size(), 17u);
  EXPECT_LE(pairs.size(), 21u);
  EXPECT_TRUE(synchronize({}, b, 0.2).empty());
  EXPECT_TRUE(synchronize(a, {}, 0.2).empty());
}

TEST(Synchronize, ChunkingInvariance) {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> dt(0.01, 0.12);
  std::vector<EgoVelocityEstimate> a, b;
  double ta = 0.0, tb = 0.03;
  for (int k = 0; k < 300; ++k) {
    a.push_back(est(ta += dt(rng), dt(rng), dt(rng)));
    b.push_back(est(tb += dt(rng), dt(rng), dt(rng), dt(rng)));
  }
  const auto reference = synchronize(a, b, 0.1);
  ASSERT_GT(reference.size(), 100u);
  for (std::size_t chunk : {1u, 3u, 17u, 100u}) {
    Synchronizer sync(0.1);
    std::vector<MeasurementPair> out;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
      for (std::size_t k = 0; k < chunk && ia < a.size(); ++k) sync.push_a(a[ia++]);
      for (std::size_t k = 0; k < chunk + 1 && ib < b.size(); ++k) sync.push_b(b[ib++]);
      const auto part = sync.drain();
      out.insert(out.end(), part.begin(), part.end());
    }
    const auto rest = sync.finish();
    out.insert(out.end(), rest.begin(), rest.end());
    EXPECT_EQ(out, reference) << "chunk " << chunk;
  }
}

TEST(Synchronize, RejectsUnsortedInput) {
  Synchronizer sync(0.2);
  sync.push_a(est(1.0, 0, 0));
  EXPECT_THROW(sync.push_a(est(0.5, 0, 0)), Error);
  EXPECT_THROW(Synchronizer(0.0), Error);
}

TEST(FilterPairs, Threshold) {
  const Extrinsics ex{0.5, 0.0};
  std::vector<MeasurementPair> pairs;
  for (double s : {0.0, 0.049, 0.05, 0.051, 0.2, 0.01}) {
    pairs.push_back({0.0, est(0, s, 0), est(0, 1, 0)});
  }
  pairs.push_back({0.0, est(0, 1, 0), est(0, 0.0, 0.01)});
  const auto kept = filter_pairs(pairs, 0.05);
  ASSERT_EQ(kept.size(), 3u);
  for (const auto& p : kept) EXPECT_GE(p.a.velocity.norm(), 0.05);
  EXPECT_EQ(filter_pairs(pairs, 0.0), pairs);
  EXPECT_EQ(filter_pairs(kept, 0.05), kept);

  std::vector<MeasurementPair> still(5, MeasurementPair{0.0, est(0, 0, 0), est(0, 0, 0)});
  EXPECT_TRUE(filter_pairs(still, 0.05).empty());
  (void)ex;
}

TEST(FilterPairs, Idempotent) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<MeasurementPair> pairs;
  for (int k = 0; k < 200; ++k) pairs.push_back({0.0, est(0, u(rng), u(rng)), est(0, u(rng), u(rng))});
  const auto once = filter_pairs(pairs, 0.05);
  EXPECT_EQ(filter_pairs(once, 0.05), once);
}

TEST(PairsFromScans, RecoversVelocities) {
  const ScanStreams s = small_scans();
  PipelineConfig cfg;
  cfg.ransac.residual_threshold = 0.1;
  const auto pairs = pairs_from_scans(s.a, s.b, cfg);
  EXPECT_GT(pairs.size(), s.a.size() * 9 / 10);
  const StreamEstimates e = estimate_stream(s.a, cfg.ransac);
  EXPECT_EQ(e.estimates.size() + e.skipped, s.a.size());
}

TEST(Report, RoundTripAndContents) {
  TrajectoryProfile p;
  const GroundTruth t = generate_trajectory(p);
  NoiseSpec n;
  n.sigma_r = 0.1;
  n.rng_seed = 2;
  const auto pairs = simulate_pairs(t, n);
  ReportDocument doc;
  doc.report = solve_lm(pairs);
  doc.config = config_entries(PipelineConfig{});
  doc.velocity_errors = fused_ego_velocities(doc.report, pairs, VelocityReference::kGroundTruth,
                                             t.radar_velocities());
  const auto dir = testing::temp_dir("report_round_trip");
  write_report(doc, dir / "r.json");
  const ReportDocument back = read_report(dir / "r.json");
  EXPECT_EQ(back, doc);
  EXPECT_EQ(back.report.mean_velocity_error, velocity_error_metric(pairs, back.report.extrinsics));
  const std::string text = slurp(dir / "r.json");
  EXPECT_NE(text.find("velocity_error_quantiles"), std::string::npos);
}

TEST(Report, UnconvergedAndInfinite) {
  CalibrationReport r;
  r.converged = false;
  r.extrinsics = {0.3, -2.0};
  r.extrinsic_covariance << std::numeric_limits<double>::infinity(), 0, 0, 1;
  r.flat_direction = true;
  const auto dir = testing::temp_dir("report_unconverged");
  write_report({r, {}, {}}, dir / "r.json");
  const ReportDocument back = read_report(dir / "r.json");
  EXPECT_FALSE(back.report.converged);
  EXPECT_EQ(back.report.extrinsics, r.extrinsics);
  EXPECT_EQ(back.report, r);
  EXPECT_THROW(write_report({r, {}, {}}, "/nonexistent/dir/r.json"), Error);
}

}  // namespace
}  // namespace rrcal
