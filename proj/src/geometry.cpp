#include "rrcal/geometry.hpp"

#include <cmath>
#include <string>

#include "rrcal/error.hpp"

namespace rrcal {
namespace {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": non-finite input");
  }
}

}  // namespace

Mat2 rot2(double theta) {
  require_finite(theta, "rot2");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat2 wedge(double r) {
  require_finite(r, "wedge");
  Mat2 m;
  m << 0.0, -r, r, 0.0;
  return m;
}

double wrap_axis(double theta) {
  require_finite(theta, "wrap_axis");
  double w = std::fmod(theta, kPi);
  if (w < 0.0) w += kPi;
  // fmod of a tiny negative value plus pi can round up to exactly pi.
  if (w >= kPi) w = 0.0;
  return w;
}

double wrap_pi(double theta) {
  require_finite(theta, "wrap_pi");
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

double axis_distance(double a, double b) {
  const double d = wrap_axis(a - b);
  return std::min(d, kPi - d);
}

double angle_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace rrcal
