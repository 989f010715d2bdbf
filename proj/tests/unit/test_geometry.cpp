#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "rrcal/error.hpp"
#include "rrcal/geometry.hpp"

namespace rrcal {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Rot2, ZeroIsIdentity) { EXPECT_TRUE(rot2(0.0).isApprox(Mat2::Identity(), 0.0)); }

TEST(Rot2, QuarterTurn) {
  Mat2 expected;
  expected << 0, -1, 1, 0;
  EXPECT_LT((rot2(kPi / 2) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rot2, Orthonormal) {
  const Mat2 r = rot2(0.3);
  EXPECT_LT((r.transpose() * r - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Rot2, Composition) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng);
    EXPECT_LT((rot2(a) * rot2(b) - rot2(a + b)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Rot2, RejectsNonFinite) {
  EXPECT_THROW(rot2(kNan), Error);
  EXPECT_THROW(rot2(kInf), Error);
  try {
    rot2(kNan);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Wedge, Examples) {
  EXPECT_TRUE(wedge(0.0).isZero(0.0));
  EXPECT_TRUE((wedge(1.0) * Vec2(1, 0)).isApprox(Vec2(0, 1)));
  EXPECT_TRUE((wedge(2.0) * Vec2(3, 4)).isApprox(Vec2(-8, 6)));
  EXPECT_THROW(wedge(kNan), Error);
}

TEST(Wedge, OrthogonalToInput) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double r = u(rng);
    const Vec2 v{u(rng), u(rng)};
    EXPECT_LE(std::abs((wedge(r) * v).dot(v)), 1e-12 * v.squaredNorm() * std::abs(r) + 1e-300);
  }
}

TEST(WrapAxis, Examples) {
  EXPECT_NEAR(wrap_axis(kPi / 4), kPi / 4, 1e-15);
  EXPECT_NEAR(wrap_axis(-kPi / 4), 3 * kPi / 4, 1e-15);
  EXPECT_NEAR(wrap_axis(7 * kPi / 3), kPi / 3, 1e-12);
  EXPECT_THROW(wrap_axis(kNan), Error);
}

TEST(WrapAxis, RangeIdempotenceAndPeriod) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    const double w = wrap_axis(t);
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, kPi);
    EXPECT_EQ(wrap_axis(w), w);
    EXPECT_LT(axis_distance(wrap_axis(t + kPi), w), 1e-12);
    EXPECT_NEAR(std::remainder(t - w, kPi), 0.0, 1e-9);
  }
  EXPECT_LT(wrap_axis(std::nextafter(kPi, 0.0)), kPi);
  EXPECT_LT(wrap_axis(-1e-18), kPi);
}

TEST(WrapPi, RangeAndIdempotence) {
  EXPECT_EQ(wrap_pi(kPi), kPi);
  EXPECT_NEAR(wrap_pi(-kPi), kPi, 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_pi(u(rng));
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_EQ(wrap_pi(w), w);
  }
}

TEST(AngleDistance, Periods) {
  EXPECT_NEAR(axis_distance(0.01, kPi - 0.01), 0.02, 1e-12);
  EXPECT_NEAR(angle_distance(-kPi + 0.01, kPi - 0.01), 0.02, 1e-12);
  EXPECT_NEAR(angle_distance(0.0, kPi), kPi, 1e-12);
}

}  // namespace
}  // namespace rrcal
