#pragma once

// Single-aircraft track planning over a binarised risk grid.
//
// The search is a best-first expansion on 26-connected cells. Path cost is the weighted
// sum of the trapezoidal risk cost and the energy-priced transport cost; every node adds
// a penalty proportional to the number of unsafe cells on the shell of its safety buffer.
// The resulting cell path is then straightened by merging cells into safe boxes and
// finally smoothed with a natural cubic spline.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"
#include "uam/geometry.hpp"
#include "uam/risk_model.hpp"
#include "uam/spline.hpp"

namespace uam {

struct AircraftPerformance {
  double h_min = 90.0;                // m
  double h_max = 3000.0;              // m
  double max_range = 30000.0;         // L_e, m
  double max_takeoff_mass = 650.0;    // kg
  double empty_mass = 400.0;          // kg
  double payload_max = 220.0;         // kg
  double wind_max = 26.45;            // m/s
  double cruise_speed = 25.0;         // m/s
  double energy_horizontal = 5.135e3; // J/m
  double energy_vertical = 4.65e5;    // J/m
  double energy_cost = 5.96e-7;       // currency/J
  double full_load_factor = 1.56;

  void validate() const {
    if (!(h_min < h_max)) throw ValidationError("aircraft altitude limits are inverted");
    if (!(max_range > 0 && max_takeoff_mass > 0 && empty_mass > 0 && payload_max > 0 && wind_max > 0 &&
          cruise_speed > 0 && energy_horizontal > 0 && energy_vertical > 0 && energy_cost > 0 &&
          full_load_factor > 0)) {
      throw ValidationError("aircraft performance values must be positive");
    }
  }
};

struct TrackQuery {
  CellIndex origin;
  CellIndex destination;
  double w_risk = 0.5;           // omega_4
  double w_transport = 0.5;      // omega_5
  double airspace_min = 30.0;    // h'_min, m
  double airspace_max = 300.0;   // h'_max, m
  double clearance = 50.0;       // s_min, m
  double penalty = 100.0;        // mu
  double payload = 0.0;          // actual passenger mass, kg
  double wind = 0.0;             // actual wind speed, m/s
  // Risk values are divided by this before costing; zero means the map's threshold.
  double risk_unit = 0.0;
  // A weight of exactly zero is replaced by tie_weight times the other weight, so that
  // ties on the remaining objective are broken towards the better value of the dropped one.
  double tie_weight = 1e-6;

  void validate() const {
    if (w_risk < 0 || w_transport < 0 || (w_risk == 0 && w_transport == 0))
      throw ValidationError("objective weights must be >= 0 and not both zero");
    if (clearance < 0) throw ValidationError("safety clearance must be >= 0");
    if (penalty < 0) throw ValidationError("penalty coefficient must be >= 0");
    if (risk_unit < 0 || tie_weight < 0) throw ValidationError("risk unit and tie weight must be >= 0");
  }
};

enum class TrackStage { kShortest, kInitial, kEquivalent, kSmoothed };

inline const char* stage_name(TrackStage s) {
  switch (s) {
    case TrackStage::kShortest: return "shortest";
    case TrackStage::kInitial: return "initial";
    case TrackStage::kEquivalent: return "equivalent";
    case TrackStage::kSmoothed: return "smoothed";
  }
  return "?";
}

struct TrackCost {
  double total = 0.0;      // C
  double risk = 0.0;       // C_R
  double transport = 0.0;  // C_T
};

struct Track {
  TrackStage stage = TrackStage::kInitial;
  std::vector<Point3> waypoints;
  std::vector<double> times;  // pass time per waypoint, departure at 0
  TrackCost cost;
  double length = 0.0;

  std::size_t size() const { return waypoints.size(); }
};

struct AltitudeWindow {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double z) const { return z >= lo - 1e-9 && z <= hi + 1e-9; }
};

inline AltitudeWindow altitude_window(const TrackQuery& q, const AircraftPerformance& perf) {
  return {std::max(perf.h_min, q.airspace_min), std::min(perf.h_max, q.airspace_max)};
}

struct BufferSize {
  int x = 1, y = 1, z = 1;
  int half(int axis) const { return (axis == 0 ? x : (axis == 1 ? y : z)) / 2; }
};

inline BufferSize buffer_size(double clearance, const GridSpec& grid) {
  if (clearance < 0) throw DomainError("safety clearance must be >= 0");
  auto n = [&](double s) { return static_cast<int>(std::ceil(clearance / s - 1e-9)) * 2 + 1; };
  return {n(grid.dx()), n(grid.dy()), n(grid.dz())};
}

// Unsafe-cell count on the outer shell of the buffer box centred at `center`.
inline int buffer_penalty(const CellIndex& center, const RiskMap& map, const BufferSize& n) {
  const int hx = n.half(0), hy = n.half(1), hz = n.half(2);
  int total = 0;
  for (int dk = -hz; dk <= hz; ++dk)
    for (int di = -hx; di <= hx; ++di)
      for (int dj = -hy; dj <= hy; ++dj) {
        const bool shell = std::abs(di) == hx || std::abs(dj) == hy || std::abs(dk) == hz;
        if (!shell) {
          dj = hy - 1;  // skip the interior run of this row
          continue;
        }
        total += map.flag({center.i + di, center.j + dj, center.k + dk});
      }
  return total;
}

inline double segment_risk_cost(const Point3& p0, const Point3& p1, double r0, double r1) {
  return 0.5 * (r0 + r1) * distance(p0, p1);
}

inline double load_factor(const AircraftPerformance& perf, double payload) {
  if (payload < 0) throw DomainError("payload must be >= 0");
  if (payload > perf.payload_max) throw OverloadError("payload exceeds the aircraft's maximum payload");
  return 1.0 + payload / perf.payload_max * perf.full_load_factor;
}

inline double transport_energy_cost(double horizontal, double vertical, const AircraftPerformance& perf, double tau) {
  return (perf.energy_horizontal * horizontal + perf.energy_vertical * vertical) * perf.energy_cost * tau;
}

inline double segment_transport_cost(const Point3& p0, const Point3& p1, const AircraftPerformance& perf,
                                     double payload) {
  return transport_energy_cost(horizontal_distance(p0, p1), std::abs(p1.z - p0.z), perf, load_factor(perf, payload));
}

namespace detail {
inline double risk_unit(const TrackQuery& q, const RiskMap& map) {
  if (q.risk_unit > 0) return q.risk_unit;
  return map.threshold > 0 ? map.threshold : 1.0;
}

inline std::vector<double> waypoint_times(const std::vector<Point3>& pts, double speed) {
  std::vector<double> t(pts.size(), 0.0);
  for (std::size_t n = 1; n < pts.size(); ++n) t[n] = t[n - 1] + distance(pts[n - 1], pts[n]) / speed;
  return t;
}
}  // namespace detail

inline TrackCost track_cost(const std::vector<Point3>& pts, const RiskMap& map, const AircraftPerformance& perf,
                            const TrackQuery& q) {
  const double unit = detail::risk_unit(q, map);
  const double tau = load_factor(perf, q.payload);
  TrackCost c;
  for (std::size_t n = 1; n < pts.size(); ++n) {
    const double r0 = map.at(point_to_cell(pts[n - 1], map.grid)) / unit;
    const double r1 = map.at(point_to_cell(pts[n], map.grid)) / unit;
    c.risk += segment_risk_cost(pts[n - 1], pts[n], r0, r1);
    c.transport += transport_energy_cost(horizontal_distance(pts[n - 1], pts[n]), std::abs(pts[n].z - pts[n - 1].z),
                                         perf, tau);
  }
  c.total = q.w_risk * c.risk + q.w_transport * c.transport;
  return c;
}

inline TrackCost track_cost(const Track& t, const RiskMap& map, const AircraftPerformance& perf, const TrackQuery& q) {
  return track_cost(t.waypoints, map, perf, q);
}

inline Track make_track(TrackStage stage, std::vector<Point3> pts, const RiskMap& map, const AircraftPerformance& perf,
                        const TrackQuery& q) {
  Track t;
  t.stage = stage;
  t.waypoints = std::move(pts);
  t.times = detail::waypoint_times(t.waypoints, perf.cruise_speed);
  t.length = polyline_length(t.waypoints);
  t.cost = track_cost(t.waypoints, map, perf, q);
  return t;
}

struct PlanResult {
  Track track;
  std::vector<CellIndex> cells;
  double objective = 0.0;              // accumulated search cost at the destination
  std::vector<double> cost_to_come;    // per cell on the path
  std::vector<double> heuristic;       // per cell on the path
  std::size_t expanded = 0;
  double seconds = 0.0;
};

// Search graph shared by the planner and by anything that needs the exact edge costs.
class PlanningGraph {
 public:
  PlanningGraph(const TrackQuery& q, const RiskMap& map, const AircraftPerformance& perf)
      : q_(q), map_(map), perf_(perf), grid_(map.grid) {
    q.validate();
    perf.validate();
    window_ = altitude_window(q, perf);
    unit_ = detail::risk_unit(q, map);
    tau_ = load_factor(perf, q.payload);
    w_risk_ = q.w_risk;
    w_transport_ = q.w_transport;
    if (w_risk_ == 0) w_risk_ = q.tie_weight * w_transport_;
    if (w_transport_ == 0) w_transport_ = q.tie_weight * w_risk_;
    buffer_ = buffer_size(q.clearance, grid_);
    layer_ok_.assign(grid_.c() + 1, false);
    bool any = false;
    for (int k = 1; k <= grid_.c(); ++k) {
      layer_ok_[k] = window_.contains((k - 0.5) * grid_.dz());
      any = any || layer_ok_[k];
    }
    if (!(window_.lo <= window_.hi) || !any) throw ConstraintError("altitude window contains no grid layer");
    penalty_.assign(q.penalty > 0 ? grid_.cell_count() : 0, -1);
  }

  bool usable(const CellIndex& c) const { return grid_.valid(c) && layer_ok_[c.k] && !map_.is_unsafe(c); }
  bool layer_ok(int k) const { return k >= 1 && k <= grid_.c() && layer_ok_[k]; }
  const AltitudeWindow& window() const { return window_; }
  const BufferSize& buffer() const { return buffer_; }
  double w_risk() const { return w_risk_; }
  double w_transport() const { return w_transport_; }
  double risk(const CellIndex& c) const { return map_.at(c) / unit_; }

  double node_penalty(const CellIndex& c) {
    if (q_.penalty <= 0) return 0.0;
    auto& slot = penalty_[grid_.linear(c)];
    if (slot < 0) slot = buffer_penalty(c, map_, buffer_);
    return q_.penalty * slot;
  }

  double edge_cost(const CellIndex& a, const CellIndex& b) const {
    const Point3 pa = cell_center(a, grid_), pb = cell_center(b, grid_);
    return w_risk_ * segment_risk_cost(pa, pb, risk(a), risk(b)) +
           w_transport_ * transport_energy_cost(horizontal_distance(pa, pb), std::abs(pb.z - pa.z), perf_, tau_);
  }

  // Straight-line transport cost to the destination; the risk part is taken as zero.
  double heuristic(const CellIndex& c) const {
    const Point3 p = cell_center(c, grid_), d = cell_center(q_.destination, grid_);
    return w_transport_ * transport_energy_cost(horizontal_distance(p, d), std::abs(d.z - p.z), perf_, tau_);
  }

  const GridSpec& grid() const { return grid_; }

 private:
  const TrackQuery& q_;
  const RiskMap& map_;
  const AircraftPerformance& perf_;
  const GridSpec& grid_;
  AltitudeWindow window_;
  double unit_ = 1.0, tau_ = 1.0, w_risk_ = 0.0, w_transport_ = 0.0;
  BufferSize buffer_;
  std::vector<char> layer_ok_;
  std::vector<int> penalty_;
};

inline PlanResult plan_initial_track(const TrackQuery& q, const RiskMap& map, const AircraftPerformance& perf) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanningGraph graph(q, map, perf);
  const GridSpec& grid = map.grid;
  grid.require_valid(q.origin);
  grid.require_valid(q.destination);
  for (const auto& [name, c] : {std::pair{"origin", q.origin}, std::pair{"destination", q.destination}}) {
    if (!graph.layer_ok(c.k)) throw ConstraintError(std::string(name) + " lies outside the altitude window");
    if (map.is_unsafe(c)) throw ValidationError(std::string(name) + " cell " + to_string(c) + " is unsafe");
  }
  if (q.wind > perf.wind_max) throw ConstraintError("actual wind exceeds the aircraft's wind limit");
  if (perf.empty_mass + perf.payload_max > perf.max_takeoff_mass)
    throw ConstraintError("empty mass plus maximum payload exceeds maximum takeoff mass");

  struct Entry {
    double f, h;
    CellIndex c;
    bool operator>(const Entry& o) const { return std::tie(f, h, c) > std::tie(o.f, o.h, o.c); }
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(grid.cell_count(), inf);
  std::vector<std::int64_t> parent(grid.cell_count(), -1);
  std::vector<char> closed(grid.cell_count(), 0);
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const auto start = grid.linear(q.origin);
  g[start] = graph.node_penalty(q.origin);
  open.push({g[start] + graph.heuristic(q.origin), graph.heuristic(q.origin), q.origin});
  std::size_t expanded = 0;
  bool found = false;
  const auto goal = grid.linear(q.destination);

  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    const auto u = grid.linear(e.c);
    if (closed[u]) continue;
    closed[u] = 1;
    ++expanded;
    if (u == goal) {
      found = true;
      break;
    }
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          if (!di && !dj && !dk) continue;
          const CellIndex n{e.c.i + di, e.c.j + dj, e.c.k + dk};
          if (!graph.usable(n)) continue;
          const auto v = grid.linear(n);
          if (closed[v]) continue;
          const double ng = g[u] + graph.edge_cost(e.c, n) + graph.node_penalty(n);
          if (ng < g[v]) {
            g[v] = ng;
            parent[v] = static_cast<std::int64_t>(u);
            const double h = graph.heuristic(n);
            open.push({ng + h, h, n});
          }
        }
  }
  if (!found) {
    throw InfeasibleError("no feasible track from " + to_string(q.origin) + " to " + to_string(q.destination) +
                              " (" + std::to_string(expanded) + " nodes explored)",
                          expanded);
  }

  PlanResult res;
  for (std::int64_t n = static_cast<std::int64_t>(goal); n >= 0; n = parent[n]) {
    res.cells.push_back(grid.from_linear(static_cast<std::size_t>(n)));
  }
  std::reverse(res.cells.begin(), res.cells.end());
  std::vector<Point3> pts;
  for (const auto& c : res.cells) {
    pts.push_back(cell_center(c, grid));
    res.cost_to_come.push_back(g[grid.linear(c)]);
    res.heuristic.push_back(graph.heuristic(c));
  }
  res.objective = g[goal];
  res.expanded = expanded;
  res.track = make_track(TrackStage::kInitial, std::move(pts), map, perf, q);
  if (res.track.length > perf.max_range) {
    throw RangeError("track length " + std::to_string(res.track.length) + " m exceeds range " +
                         std::to_string(perf.max_range) + " m",
                     expanded);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// The transport-only, buffer-free variant of a query.
inline TrackQuery shortest_query(TrackQuery q) {
  q.w_risk = 0.0;
  q.penalty = 0.0;
  if (q.w_transport == 0) q.w_transport = 1.0;
  return q;
}

struct Violation {
  std::string constraint;
  int waypoint = -1;  // -1 for whole-track constraints
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& constraint) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.constraint == constraint; });
  }
};

// Checks altitude window, building clearance, repeated waypoints, range, mass and wind.
// Clearance is skipped when no scene is given.
inline ValidationReport validate_track(const Track& t, const TrackQuery& q, const AircraftPerformance& perf,
                                       const UrbanScene* scene = nullptr) {
  ValidationReport rep;
  if (t.waypoints.empty()) {
    rep.violations.push_back({"empty", -1, "track has no waypoints"});
    return rep;
  }
  const AltitudeWindow win = altitude_window(q, perf);
  std::set<std::tuple<double, double, double>> seen;
  for (std::size_t n = 0; n < t.waypoints.size(); ++n) {
    const Point3& p = t.waypoints[n];
    if (!win.contains(p.z)) {
      rep.violations.push_back({"altitude", static_cast<int>(n),
                                "z=" + std::to_string(p.z) + " outside [" + std::to_string(win.lo) + "," +
                                    std::to_string(win.hi) + "]"});
    }
    if (!seen.insert({p.x, p.y, p.z}).second) rep.violations.push_back({"repeat", static_cast<int>(n), "repeated waypoint"});
    if (scene && q.clearance > 0) {
      const GridSpec& g = scene->grid;
      const int ri = static_cast<int>(std::ceil(q.clearance / g.dx())) + 1;
      const int rj = static_cast<int>(std::ceil(q.clearance / g.dy())) + 1;
      const int rk = static_cast<int>(std::ceil(q.clearance / g.dz())) + 1;
      const double cx = std::clamp(p.x, 0.0, g.x_max()), cy = std::clamp(p.y, 0.0, g.y_max()),
                   cz = std::clamp(p.z, 0.0, g.z_max());
      const CellIndex c = point_to_cell({cx, cy, cz}, g);
      bool violated = false;
      for (int di = -ri; di <= ri && !violated; ++di)
        for (int dj = -rj; dj <= rj && !violated; ++dj)
          for (int dk = -rk; dk <= rk && !violated; ++dk) {
            const CellIndex b{c.i + di, c.j + dj, c.k + dk};
            if (!g.valid(b) || !scene->is_obstacle(b)) continue;
            if (distance(p, cell_center(b, g)) < q.clearance - 1e-9) violated = true;
          }
      if (violated) rep.violations.push_back({"clearance", static_cast<int>(n), "closer than s_min to a building cell"});
    }
  }
  const double len = polyline_length(t.waypoints);
  if (len > perf.max_range) rep.violations.push_back({"range", -1, "length " + std::to_string(len) + " m exceeds L_e"});
  if (perf.empty_mass + perf.payload_max > perf.max_takeoff_mass)
    rep.violations.push_back({"mass", -1, "m_e + m_p_max exceeds m_max"});
  if (q.payload > perf.payload_max) rep.violations.push_back({"payload", -1, "actual payload exceeds m_p_max"});
  if (q.wind > perf.wind_max) rep.violations.push_back({"wind", -1, "actual wind exceeds v_we"});
  return rep;
}

// Cells that are safe, inside the altitude window, and whose 3x3x3 neighbourhood is safe.
class ClearanceField {
 public:
  ClearanceField(const RiskMap& map, const AltitudeWindow& window) : map_(map), window_(window) {
    const GridSpec& g = map.grid;
    clear_.assign(g.cell_count(), 0);
    for (std::size_t n = 0; n < g.cell_count(); ++n) {
      const CellIndex c = g.from_linear(n);
      if (!window.contains((c.k - 0.5) * g.dz()) || map.is_unsafe(c)) continue;
      bool ok = true;
      for (int di = -1; di <= 1 && ok; ++di)
        for (int dj = -1; dj <= 1 && ok; ++dj)
          for (int dk = -1; dk <= 1 && ok; ++dk) ok = map.flag({c.i + di, c.j + dj, c.k + dk}) == 0;
      clear_[n] = ok ? 1 : 0;
    }
  }

  bool clear(const CellIndex& c) const { return map_.grid.valid(c) && clear_[map_.grid.linear(c)]; }

  // A point passes when it is inside the altitude window and lies in (the closure of) at
  // least one clear cell.
  bool point_clear(const Point3& p) const {
    const GridSpec& g = map_.grid;
    if (!window_.contains(p.z)) return false;
    if (p.x < 0 || p.y < 0 || p.z < 0 || p.x > g.x_max() || p.y > g.y_max() || p.z > g.z_max()) return false;
    std::array<std::vector<int>, 3> cand;
    for (int axis = 0; axis < 3; ++axis) {
      const double div = g.division(axis);
      const double u = p[axis] / div;
      const int base = static_cast<int>(std::floor(u)) + 1;
      cand[axis].push_back(base);
      if (std::abs(u - std::round(u)) < 1e-9) {
        const int edge = static_cast<int>(std::round(u));
        cand[axis] = {edge, edge + 1};
      }
    }
    for (int i : cand[0])
      for (int j : cand[1])
        for (int k : cand[2])
          if (clear({i, j, k})) return true;
    return false;
  }

 private:
  const RiskMap& map_;
  AltitudeWindow window_;
  std::vector<std::uint8_t> clear_;
};

namespace detail {
struct Box {
  CellIndex lo, hi;
};

inline Box hull(const Box& b, const CellIndex& c) {
  return {{std::min(b.lo.i, c.i), std::min(b.lo.j, c.j), std::min(b.lo.k, c.k)},
          {std::max(b.hi.i, c.i), std::max(b.hi.j, c.j), std::max(b.hi.k, c.k)}};
}

inline std::pair<Point3, Point3> box_extent(const Box& b, const GridSpec& g) {
  return {{(b.lo.i - 1) * g.dx(), (b.lo.j - 1) * g.dy(), (b.lo.k - 1) * g.dz()},
          {b.hi.i * g.dx(), b.hi.j * g.dy(), b.hi.k * g.dz()}};
}

// Drops consecutive duplicates and interior points that lie on the straight segment
// between their neighbours.
inline std::vector<Point3> simplify_collinear(const std::vector<Point3>& in) {
  std::vector<Point3> pts;
  for (const auto& p : in)
    if (pts.empty() || distance(pts.back(), p) > 1e-9) pts.push_back(p);
  if (pts.size() < 3) return pts;
  std::vector<Point3> out{pts.front()};
  for (std::size_t n = 1; n + 1 < pts.size(); ++n) {
    const Point3 u = pts[n] - out.back(), v = pts[n + 1] - pts[n];
    const Point3 cross{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
    const bool straight = norm(cross) <= 1e-9 * norm(u) * norm(v) && dot(u, v) > 0;
    if (!straight) out.push_back(pts[n]);
  }
  out.push_back(pts.back());
  return out;
}
}  // namespace detail

// Merges runs of path cells into axis-aligned boxes of clear cells and connects the
// boxes through entry/exit nodes on their shared boundary. Falls back to the initial
// polyline (minus collinear points) when merging does not shorten it.
inline Track merge_to_equivalent(const Track& initial, const RiskMap& map, const AircraftPerformance& perf,
                                 const TrackQuery& q) {
  const GridSpec& g = map.grid;
  if (initial.waypoints.size() < 2) {
    Track t = initial;
    t.stage = TrackStage::kEquivalent;
    return t;
  }
  const ClearanceField field(map, altitude_window(q, perf));
  std::vector<CellIndex> cells;
  for (const auto& p : initial.waypoints) cells.push_back(point_to_cell(p, g));

  // A box may only hold clear cells that are no riskier than the path cells it replaces.
  auto box_ok = [&](const detail::Box& b, double risk_cap) {
    for (int k = b.lo.k; k <= b.hi.k; ++k)
      for (int i = b.lo.i; i <= b.hi.i; ++i)
        for (int j = b.lo.j; j <= b.hi.j; ++j)
          if (!field.clear({i, j, k}) || map.at({i, j, k}) > risk_cap) return false;
    return true;
  };

  std::vector<detail::Box> boxes{{cells[0], cells[0]}};
  double run_cap = map.at(cells[0]);
  for (std::size_t n = 1; n < cells.size(); ++n) {
    const detail::Box grown = detail::hull(boxes.back(), cells[n]);
    const double cap = std::max(run_cap, map.at(cells[n]));
    if (box_ok(grown, cap * (1.0 + 1e-12))) {
      boxes.back() = grown;
      run_cap = cap;
    } else {
      boxes.push_back({cells[n], cells[n]});
      run_cap = map.at(cells[n]);
    }
  }

  std::vector<Point3> pts{initial.waypoints.front()};
  for (std::size_t e = 0; e + 1 < boxes.size(); ++e) {
    const auto [lo0, hi0] = detail::box_extent(boxes[e], g);
    const auto [lo1, hi1] = detail::box_extent(boxes[e + 1], g);
    const Point3 c0 = 0.5 * (lo0 + hi0), c1 = 0.5 * (lo1 + hi1);
    Point3 ilo, ihi, node;
    int free_axes = 0;
    for (int a = 0; a < 3; ++a) {
      ilo[a] = std::max(lo0[a], lo1[a]);
      ihi[a] = std::min(hi0[a], hi1[a]);
      if (ihi[a] - ilo[a] > 1e-9) ++free_axes;
    }
    for (int a = 0; a < 3; ++a) {
      if (ihi[a] - ilo[a] <= 1e-9) {
        node[a] = ilo[a];
      } else if (free_axes == 1) {
        node[a] = std::clamp(pts.back()[a], ilo[a], ihi[a]);  // carry the entering coordinate
      } else {
        node[a] = std::clamp(0.5 * (c0[a] + c1[a]), ilo[a], ihi[a]);
      }
    }
    pts.push_back(node);
  }
  pts.push_back(initial.waypoints.back());
  pts = detail::simplify_collinear(pts);

  const auto fallback = detail::simplify_collinear(initial.waypoints);
  if (pts.size() > initial.waypoints.size() || polyline_length(pts) > initial.length + 1e-9) pts = fallback;
  return make_track(TrackStage::kEquivalent, std::move(pts), map, perf, q);
}

struct SmoothingReport {
  std::size_t samples = 0;
  std::size_t fallback_pieces = 0;
  std::size_t unclear_samples = 0;  // samples still failing after fallback
};

// Natural cubic spline through the equivalent waypoints, sampled piecewise at `step`
// (default half a cell along x). A spline piece whose samples fail the clearance check is
// replaced by the straight segment between its knots.
inline Track smooth_track(const Track& equivalent, const RiskMap& map, const AircraftPerformance& perf,
                          const TrackQuery& q, double step = 0.0, SmoothingReport* report = nullptr) {
  const GridSpec& g = map.grid;
  if (step <= 0) step = g.dx() / 2.0;
  const auto& knots_pts = equivalent.waypoints;
  if (knots_pts.size() < 2) {
    Track t = equivalent;
    t.stage = TrackStage::kSmoothed;
    return t;
  }
  const ClearanceField field(map, altitude_window(q, perf));
  const ChordSpline3 spline(knots_pts);
  const auto& t = spline.knots();
  SmoothingReport rep;
  std::vector<Point3> out{knots_pts.front()};
  for (std::size_t piece = 0; piece + 1 < knots_pts.size(); ++piece) {
    const double h = t[piece + 1] - t[piece];
    const int steps = std::max(1, static_cast<int>(std::ceil(h / step - 1e-9)));
    std::vector<Point3> curve, line;
    for (int s = 1; s <= steps; ++s) {
      const double u = static_cast<double>(s) / steps;
      curve.push_back(s == steps ? knots_pts[piece + 1] : spline(t[piece] + u * h));
      line.push_back(s == steps ? knots_pts[piece + 1]
                                : knots_pts[piece] + u * (knots_pts[piece + 1] - knots_pts[piece]));
    }
    const bool ok = std::all_of(curve.begin(), curve.end(), [&](const Point3& p) { return field.point_clear(p); });
    const auto& chosen = ok ? curve : line;
    if (!ok) ++rep.fallback_pieces;
    for (const auto& p : chosen) {
      rep.unclear_samples += field.point_clear(p) ? 0 : 1;
      out.push_back(p);
    }
  }
  rep.samples = out.size();
  rep.unclear_samples += field.point_clear(out.front()) ? 0 : 1;
  if (report) *report = rep;
  return make_track(TrackStage::kSmoothed, std::move(out), map, perf, q);
}

struct StagedTracks {
  std::optional<PlanResult> shortest;
  PlanResult initial;
  Track equivalent;
  Track smoothed;
  SmoothingReport smoothing;
  double seconds_equivalent = 0.0;
  double seconds_smoothed = 0.0;
};

// Shortest, initial, equivalent and smoothed tracks for one query.
inline StagedTracks plan_all_stages(const TrackQuery& q, const RiskMap& map, const AircraftPerformance& perf) {
  StagedTracks out;
  try {
    out.shortest = plan_initial_track(shortest_query(q), map, perf);
    out.shortest->track.stage = TrackStage::kShortest;
    out.shortest->track.cost = track_cost(out.shortest->track, map, perf, q);
  } catch (const InfeasibleError&) {
    out.shortest.reset();
  }
  out.initial = plan_initial_track(q, map, perf);
  const auto t0 = std::chrono::steady_clock::now();
  out.equivalent = merge_to_equivalent(out.initial.track, map, perf, q);
  const auto t1 = std::chrono::steady_clock::now();
  out.smoothed = smooth_track(out.equivalent, map, perf, q, 0.0, &out.smoothing);
  const auto t2 = std::chrono::steady_clock::now();
  out.seconds_equivalent = out.initial.seconds + std::chrono::duration<double>(t1 - t0).count();
  out.seconds_smoothed = out.seconds_equivalent + std::chrono::duration<double>(t2 - t1).count();
  return out;
}

}  // namespace uam
