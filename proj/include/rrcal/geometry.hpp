#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace rrcal {

using Vec2 = Eigen::Vector2d;
/// Column-vector convention throughout: y = M * x, Eigen storage (column-major).
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Planar rotation [[cos, -sin], [sin, cos]].
Mat2 rot2(double theta);

/// Skew operator [[0, -r], [r, 0]]; wedge(r) * v = r * (-v.y, v.x).
Mat2 wedge(double r);

/// Wraps to [0, pi). Used for the translation axis, which has period pi.
double wrap_axis(double theta);

/// Wraps to (-pi, pi].
double wrap_pi(double theta);

/// Shortest distance between two axis angles (period pi), in [0, pi/2].
double axis_distance(double a, double b);

/// Shortest distance between two angles (period 2 pi), in [0, pi].
double angle_distance(double a, double b);

/// z-component of the planar cross product a x b.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Unit vector (cos theta, sin theta).
inline Vec2 unit_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace rrcal
