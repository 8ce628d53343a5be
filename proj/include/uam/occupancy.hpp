#pragma once

// Time-stamped cell occupancy of a piecewise-linear trajectory and pairwise conflict tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"
#include "uam/geometry.hpp"

namespace uam {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval shifted(double dt) const { return {lo + dt, hi + dt}; }
  // Closed intervals: touching counts as overlap.
  bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  Interval hull(const Interval& o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
};

// Pass time per waypoint at constant speed.
inline std::vector<double> waypoint_times(const std::vector<Point3>& pts, double departure, double speed) {
  if (!(speed > 0)) throw DomainError("speed must be > 0");
  std::vector<double> t(pts.size(), departure);
  for (std::size_t n = 1; n < pts.size(); ++n) t[n] = t[n - 1] + distance(pts[n - 1], pts[n]) / speed;
  return t;
}

struct CellVisit {
  CellIndex cell;
  double t_in = 0.0;
  double t_out = 0.0;
};

// Cells crossed by the trajectory in order, with entry/exit times from exact grid-plane
// crossings. Consecutive visits of the same cell are merged.
inline std::vector<CellVisit> trajectory_cells(const std::vector<Point3>& pts, const std::vector<double>& times,
                                               const GridSpec& grid) {
  if (pts.empty()) return {};
  if (times.size() != pts.size()) throw DomainError("times and waypoints differ in length");
  std::vector<CellVisit> out;
  auto push = [&](const CellIndex& c, double a, double b) {
    if (!out.empty() && out.back().cell == c) {
      out.back().t_out = b;
      return;
    }
    out.push_back({c, a, b});
  };
  if (pts.size() == 1) {
    push(point_to_cell(pts[0], grid), times[0], times[0]);
    return out;
  }
  for (std::size_t n = 0; n + 1 < pts.size(); ++n) {
    const Point3 p0 = pts[n], p1 = pts[n + 1];
    std::vector<double> cuts{0.0, 1.0};
    for (int axis = 0; axis < 3; ++axis) {
      const double a = p0[axis], b = p1[axis];
      if (a == b) continue;
      const double div = grid.division(axis);
      const double lo = std::min(a, b), hi = std::max(a, b);
      for (double m = std::floor(lo / div) + 1; m * div < hi; m += 1.0) cuts.push_back((m * div - a) / (b - a));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return y - x < 1e-12; }), cuts.end());
    if (cuts.size() == 1) cuts.push_back(1.0);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
      const CellIndex cell = point_to_cell(p0 + mid * (p1 - p0), grid);
      push(cell, times[n] + cuts[c] * (times[n + 1] - times[n]), times[n] + cuts[c + 1] * (times[n + 1] - times[n]));
    }
  }
  return out;
}

struct Occupancy {
  std::map<CellIndex, Interval> raw;   // cells the trajectory passes through
  std::map<CellIndex, Interval> zone;  // cells whose detection neighbourhood it passes through

  Occupancy shifted(double dt) const {
    Occupancy o;
    for (const auto& [c, iv] : raw) o.raw.emplace(c, iv.shifted(dt));
    for (const auto& [c, iv] : zone) o.zone.emplace(c, iv.shifted(dt));
    return o;
  }
};

inline Occupancy cell_occupancy(const std::vector<Point3>& pts, const std::vector<double>& times, const GridSpec& grid,
                                int half_width = 1) {
  Occupancy occ;
  for (const auto& v : trajectory_cells(pts, times, grid)) {
    const Interval iv{v.t_in, v.t_out};
    auto [it, fresh] = occ.raw.emplace(v.cell, iv);
    if (!fresh) it->second = it->second.hull(iv);
    for (int di = -half_width; di <= half_width; ++di)
      for (int dj = -half_width; dj <= half_width; ++dj)
        for (int dk = -half_width; dk <= half_width; ++dk) {
          const CellIndex n{v.cell.i + di, v.cell.j + dj, v.cell.k + dk};
          if (!grid.valid(n)) continue;
          auto [zt, znew] = occ.zone.emplace(n, iv);
          if (!znew) zt->second = zt->second.hull(iv);
        }
  }
  return occ;
}

struct Conflict {
  CellIndex cell;
  Interval overlap;
};

// Earliest cell where one aircraft is inside the other's detection zone at the same time.
inline std::optional<Conflict> detect_conflict(const Occupancy& a, const Occupancy& b) {
  std::optional<Conflict> best;
  auto scan = [&](const std::map<CellIndex, Interval>& zone, const std::map<CellIndex, Interval>& raw) {
    for (const auto& [cell, r] : raw) {
      const auto it = zone.find(cell);
      if (it == zone.end() || !it->second.overlaps(r)) continue;
      const Interval ov{std::max(it->second.lo, r.lo), std::min(it->second.hi, r.hi)};
      if (!best || std::tie(ov.lo, cell) < std::tie(best->overlap.lo, best->cell)) best = Conflict{cell, ov};
    }
  };
  scan(a.zone, b.raw);
  scan(b.zone, a.raw);
  return best;
}

// Offsets dep_b - dep_a (closed intervals, merged) at which occupancies a and b, both
// expressed relative to their own departure, would conflict.
inline std::vector<Interval> forbidden_offsets(const Occupancy& a, const Occupancy& b) {
  std::vector<Interval> iv;
  for (const auto& [cell, r] : b.raw) {
    const auto it = a.zone.find(cell);
    if (it != a.zone.end()) iv.push_back({it->second.lo - r.hi, it->second.hi - r.lo});
  }
  for (const auto& [cell, r] : a.raw) {
    const auto it = b.zone.find(cell);
    if (it != b.zone.end()) iv.push_back({r.lo - it->second.hi, r.hi - it->second.lo});
  }
  std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> merged;
  for (const auto& x : iv) {
    if (!merged.empty() && x.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, x.hi);
    else
      merged.push_back(x);
  }
  return merged;
}

}  // namespace uam
