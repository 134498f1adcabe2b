#pragma once

#include <cmath>
#include <compare>
#include <numbers>

namespace l3fp {

struct Pixel {
  int x = 0;
  int y = 0;

  bool operator==(const Pixel&) const = default;
  /// Raster order: row first, then column.
  std::strong_ordering operator<=>(const Pixel& o) const {
    if (auto c = y <=> o.y; c != 0) return c;
    return x <=> o.x;
  }
};

struct Point2d {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2d&) const = default;
  Point2d operator+(Point2d o) const { return {x + o.x, y + o.y}; }
  Point2d operator-(Point2d o) const { return {x - o.x, y - o.y}; }
  Point2d operator*(double s) const { return {x * s, y * s}; }
};

inline double norm(Point2d p) { return std::hypot(p.x, p.y); }
inline double distance(Point2d a, Point2d b) { return norm(a - b); }

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into (-180, 180].
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

/// Rotation (degrees) about a center followed by a translation.
struct RigidTransform {
  double dx = 0.0;
  double dy = 0.0;
  double theta_deg = 0.0;

  bool operator==(const RigidTransform&) const = default;

  Point2d apply(Point2d p, Point2d center = {}) const {
    const double t = deg_to_rad(theta_deg);
    const double c = std::cos(t), s = std::sin(t);
    const Point2d q = p - center;
    return {c * q.x - s * q.y + center.x + dx, s * q.x + c * q.y + center.y + dy};
  }

  Point2d apply_inverse(Point2d p, Point2d center = {}) const {
    const double t = deg_to_rad(theta_deg);
    const double c = std::cos(t), s = std::sin(t);
    const Point2d q{p.x - center.x - dx, p.y - center.y - dy};
    return {c * q.x + s * q.y + center.x, -s * q.x + c * q.y + center.y};
  }
};

}  // namespace l3fp
