#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rrcal/types.hpp"

namespace rrcal::testing {

/// Model of radar b's ego-velocity written out component-wise, independent
/// of the library's rotation helpers.
inline Vec2 model_b(const Vec2& v, double omega_gamma, double theta_t, double theta_ba) {
  const double tx = std::cos(theta_t), ty = std::sin(theta_t);
  const double ux = v.x() - omega_gamma * ty;
  const double uy = v.y() + omega_gamma * tx;
  const double c = std::cos(theta_ba), s = std::sin(theta_ba);
  return {c * ux - s * uy, s * ux + c * uy};
}

inline EgoVelocityEstimate estimate(double t, const Vec2& v, double var) {
  EgoVelocityEstimate e;
  e.timestamp = t;
  e.velocity = v;
  e.covariance = var * Mat2::Identity();
  e.n_inliers = e.n_total = 10;
  return e;
}

inline MeasurementPair make_pair(double t, const Vec2& v, double omega_gamma, const Extrinsics& ex,
                                 double var = 1e-4) {
  return {t, estimate(t, v, var), estimate(t, model_b(v, omega_gamma, ex.theta_t, ex.theta_ba), var)};
}

/// Random well-conditioned problem: noisy pairs with random covariances.
struct RandomProblem {
  std::vector<MeasurementPair> pairs;
  CalibState state;
};

inline Mat2 random_spd(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat2 m;
  m << u(rng), u(rng), u(rng), u(rng);
  return scale * (m * m.transpose() + 0.2 * Mat2::Identity());
}

inline RandomProblem random_problem(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RandomProblem p;
  p.state.extrinsics = {std::acos(-1.0) * 0.5 * (u(rng) + 1.0), std::acos(-1.0) * u(rng)};
  for (std::size_t j = 0; j < m; ++j) {
    const Vec2 v{2.0 * u(rng), 2.0 * u(rng)};
    const double w = u(rng);
    p.state.motion.push_back({Vec2{2.0 * u(rng), 2.0 * u(rng)}, u(rng)});
    MeasurementPair pair = make_pair(0.1 * static_cast<double>(j), v, w, p.state.extrinsics);
    pair.a.velocity += 0.1 * Vec2{u(rng), u(rng)};
    pair.b.velocity += 0.1 * Vec2{u(rng), u(rng)};
    pair.a.covariance = random_spd(rng, 0.01);
    pair.b.covariance = random_spd(rng, 0.01);
    p.pairs.push_back(pair);
  }
  return p;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* root = std::getenv("RRCAL_TEST_TMP");
  std::filesystem::path dir =
      std::filesystem::path(root ? root : std::filesystem::temp_directory_path().string()) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rrcal::testing
