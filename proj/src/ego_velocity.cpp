#include "rrcal/ego_velocity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "rrcal/error.hpp"

namespace rrcal {
namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double symmetric_condition(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

struct Hypothesis {
  std::vector<std::size_t> inliers;
  double rms = 0.0;
};

Hypothesis score(const LsqSystem& sys, const Vec2& velocity, double threshold) {
  Hypothesis h;
  const Eigen::VectorXd residual = sys.y - sys.A * velocity;
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    if (std::abs(residual(i)) <= threshold) {
      h.inliers.push_back(static_cast<std::size_t>(i));
      sum_sq += residual(i) * residual(i);
    }
  }
  if (!h.inliers.empty()) h.rms = std::sqrt(sum_sq / static_cast<double>(h.inliers.size()));
  return h;
}

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.rms < b.rms;
}

}  // namespace

void RansacConfig::validate() const {
  if (!(inlier_fraction_threshold > 0.0 && inlier_fraction_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ransac: inlier fraction must lie in (0, 1]");
  }
  if (!(residual_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ransac: residual threshold must be positive");
  }
  if (max_iterations == 0) {
    throw Error(ErrorCode::kInvalidArgument, "ransac: max_iterations must be positive");
  }
}

LsqSystem build_lsq(const RadarScan& scan) {
  const auto n = static_cast<Eigen::Index>(scan.detections.size());
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "build_lsq: scan has no detections");
  LsqSystem sys;
  sys.A.resize(n, 2);
  sys.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Detection& d = scan.detections[static_cast<std::size_t>(i)];
    sys.A(i, 0) = std::sin(d.azimuth);
    sys.A(i, 1) = std::cos(d.azimuth);
    sys.y(i) = -d.range_rate;
  }
  return sys;
}

EgoVelocityEstimate solve_ego_velocity(const LsqSystem& system) {
  const auto n = system.A.rows();
  if (n < 3) {
    throw Error(ErrorCode::kInsufficientData, "solve_ego_velocity: need at least 3 detections");
  }
  const Mat2 normal = system.A.transpose() * system.A;
  if (symmetric_condition(normal) > kMaxNormalCondition) {
    throw Error(ErrorCode::kDegenerateGeometry, "solve_ego_velocity: azimuths nearly collinear");
  }
  const Mat2 normal_inv = normal.inverse();
  EgoVelocityEstimate est;
  est.velocity = normal_inv * (system.A.transpose() * system.y);
  const Eigen::VectorXd eps = system.y - system.A * est.velocity;
  est.covariance = (eps.squaredNorm() / static_cast<double>(n - 2)) * normal_inv;
  est.covariance = 0.5 * (est.covariance + est.covariance.transpose()).eval();
  est.n_inliers = est.n_total = static_cast<std::size_t>(n);
  return est;
}

std::uint64_t scan_seed(std::uint64_t rng_seed, double timestamp) {
  return mix(rng_seed ^ mix(std::bit_cast<std::uint64_t>(timestamp)));
}

RansacFit ransac_fit(const RadarScan& scan, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = scan.detections.size();
  if (n < 3) throw Error(ErrorCode::kInsufficientData, "ransac: need at least 3 detections");
  const LsqSystem sys = build_lsq(scan);

  Hypothesis best;
  auto try_pair = [&](std::size_t i, std::size_t j) {
    Mat2 a;
    a.row(0) = sys.A.row(static_cast<Eigen::Index>(i));
    a.row(1) = sys.A.row(static_cast<Eigen::Index>(j));
    // |det| = |sin(az_i - az_j)|; reject near-parallel lines of sight.
    if (std::abs(a.determinant()) < 1e-3) return;
    const Vec2 rhs(sys.y(static_cast<Eigen::Index>(i)), sys.y(static_cast<Eigen::Index>(j)));
    const Vec2 velocity = a.inverse() * rhs;
    Hypothesis h = score(sys, velocity, cfg.residual_threshold);
    if (better(h, best)) best = std::move(h);
  };

  const std::size_t n_pairs = n * (n - 1) / 2;
  if (n_pairs <= cfg.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) try_pair(i, j);
    }
  } else {
    std::mt19937_64 rng(scan_seed(cfg.rng_seed, scan.timestamp));
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
      const std::size_t i = static_cast<std::size_t>(rng() % n);
      std::size_t j = static_cast<std::size_t>(rng() % (n - 1));
      if (j >= i) ++j;
      try_pair(i, j);
    }
  }

  const double needed = cfg.inlier_fraction_threshold * static_cast<double>(n);
  if (best.inliers.size() < 3 || static_cast<double>(best.inliers.size()) < needed) {
    throw Error(ErrorCode::kNoConsensus,
                "ransac: best consensus " + std::to_string(best.inliers.size()) + " of " +
                    std::to_string(n) + " detections");
  }

  LsqSystem inlier_sys;
  const auto m = static_cast<Eigen::Index>(best.inliers.size());
  inlier_sys.A.resize(m, 2);
  inlier_sys.y.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto src = static_cast<Eigen::Index>(best.inliers[static_cast<std::size_t>(k)]);
    inlier_sys.A.row(k) = sys.A.row(src);
    inlier_sys.y(k) = sys.y(src);
  }

  RansacFit fit;
  fit.estimate = solve_ego_velocity(inlier_sys);
  fit.estimate.timestamp = scan.timestamp;
  fit.estimate.n_inliers = best.inliers.size();
  fit.estimate.n_total = n;
  fit.inliers = std::move(best.inliers);
  return fit;
}

EgoVelocityEstimate ransac_ego_velocity(const RadarScan& scan, const RansacConfig& cfg) {
  return ransac_fit(scan, cfg).estimate;
}

}  // namespace rrcal
