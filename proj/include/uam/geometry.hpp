#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace uam {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

inline double norm(const Point3& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }
inline double horizontal_distance(const Point3& a, const Point3& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline double polyline_length(const std::vector<Point3>& pts) {
  double total = 0.0;
  for (std::size_t n = 1; n < pts.size(); ++n) total += distance(pts[n - 1], pts[n]);
  return total;
}

// Largest heading change (radians) between consecutive segments of a polyline.
inline double max_turn_angle(const std::vector<Point3>& pts) {
  double worst = 0.0;
  for (std::size_t n = 1; n + 1 < pts.size(); ++n) {
    const Point3 u = pts[n] - pts[n - 1];
    const Point3 v = pts[n + 1] - pts[n];
    const double nu = norm(u), nv = norm(v);
    if (nu == 0.0 || nv == 0.0) continue;
    const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    worst = std::max(worst, std::acos(c));
  }
  return worst;
}

}  // namespace uam
