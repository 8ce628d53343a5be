#pragma once

// Independent oracles and fixture generators shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "uam/uam.hpp"

namespace oracle {

// Fall from rest with quadratic drag, integrated in time with classic RK4 until the drop
// height is consumed; the crossing step is interpolated linearly.
inline double impact_velocity_ode(double h, const uam::FallParams& p, double dt = 1e-4) {
  if (h <= 0) return 0.0;
  const double m = p.empty_mass + p.payload_mass;
  const double area = M_PI * p.crash_diameter * p.crash_diameter / 4.0;
  auto accel = [&](double v) { return p.gravity - 0.5 * p.drag_coefficient * p.air_density * area * v * v / m; };
  double y = 0.0, v = 0.0;
  while (true) {
    const double k1v = accel(v), k1y = v;
    const double k2v = accel(v + 0.5 * dt * k1v), k2y = v + 0.5 * dt * k1v;
    const double k3v = accel(v + 0.5 * dt * k2v), k3y = v + 0.5 * dt * k2v;
    const double k4v = accel(v + dt * k3v), k4y = v + dt * k3v;
    const double ny = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    const double nv = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (ny >= h) return v + (nv - v) * (h - y) / (ny - y);
    y = ny;
    v = nv;
  }
}

// Unsafe count over every cell of the buffer box that touches its boundary.
inline int shell_count(const uam::RiskMap& m, const uam::CellIndex& c, int hx, int hy, int hz) {
  int n = 0;
  for (int di = -hx; di <= hx; ++di)
    for (int dj = -hy; dj <= hy; ++dj)
      for (int dk = -hz; dk <= hz; ++dk) {
        if (std::abs(di) != hx && std::abs(dj) != hy && std::abs(dk) != hz) continue;
        const uam::CellIndex o{c.i + di, c.j + dj, c.k + dk};
        n += m.grid.valid(o) ? (m.is_unsafe(o) ? 1 : 0) : 1;
      }
  return n;
}

struct DijkstraResult {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<uam::CellIndex> path;
};

// Plain Dijkstra over the 26-connected cell graph with the planner's cost model spelled out
// from the defining formulas.
inline DijkstraResult dijkstra(const uam::TrackQuery& q, const uam::RiskMap& m, const uam::AircraftPerformance& perf) {
  const auto& g = m.grid;
  const double lo = std::max(perf.h_min, q.airspace_min), hi = std::min(perf.h_max, q.airspace_max);
  double wr = q.w_risk, wt = q.w_transport;
  if (wr == 0) wr = q.tie_weight * wt;
  if (wt == 0) wt = q.tie_weight * wr;
  const double unit = q.risk_unit > 0 ? q.risk_unit : m.threshold;
  const double tau = 1.0 + q.payload / perf.payload_max * perf.full_load_factor;
  auto half = [&](double div) { return static_cast<int>(std::ceil(q.clearance / div - 1e-9)); };
  const int hx = half(g.dx()), hy = half(g.dy()), hz = half(g.dz());
  auto ok = [&](const uam::CellIndex& c) {
    if (c.i < 1 || c.j < 1 || c.k < 1 || c.i > g.a() || c.j > g.b() || c.k > g.c()) return false;
    const double z = (c.k - 0.5) * g.dz();
    return z >= lo - 1e-9 && z <= hi + 1e-9 && !m.is_unsafe(c);
  };
  auto centre = [&](const uam::CellIndex& c) {
    return std::array<double, 3>{(c.i - 0.5) * g.dx(), (c.j - 0.5) * g.dy(), (c.k - 0.5) * g.dz()};
  };
  auto node = [&](const uam::CellIndex& c) { return q.penalty * shell_count(m, c, hx, hy, hz); };
  auto edge = [&](const uam::CellIndex& a, const uam::CellIndex& b) {
    const auto pa = centre(a), pb = centre(b);
    const double h = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
    const double v = std::abs(pb[2] - pa[2]);
    const double d = std::sqrt(h * h + v * v);
    const double risk = 0.5 * (m.at(a) + m.at(b)) / unit * d;
    const double transport = (perf.energy_horizontal * h + perf.energy_vertical * v) * perf.energy_cost * tau;
    return wr * risk + wt * transport;
  };
  const std::size_t N = g.cell_count();
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  std::vector<long> prev(N, -1);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  DijkstraResult res;
  if (!ok(q.origin) || !ok(q.destination)) return res;
  const auto s = g.linear(q.origin);
  dist[s] = node(q.origin);
  pq.push({dist[s], s});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const auto cu = g.from_linear(u);
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          if (!di && !dj && !dk) continue;
          const uam::CellIndex cv{cu.i + di, cu.j + dj, cu.k + dk};
          if (!ok(cv)) continue;
          const auto v = g.linear(cv);
          const double nd = d + edge(cu, cv) + node(cv);
          if (nd < dist[v]) {
            dist[v] = nd;
            prev[v] = static_cast<long>(u);
            pq.push({nd, v});
          }
        }
  }
  const auto t = g.linear(q.destination);
  res.cost = dist[t];
  if (std::isfinite(res.cost))
    for (long n = static_cast<long>(t); n >= 0; n = prev[n]) res.path.insert(res.path.begin(), g.from_linear(n));
  return res;
}

// Objective of a cell path under the planner's pricing (edges plus node penalties).
inline double path_objective(const std::vector<uam::CellIndex>& cells, const uam::TrackQuery& q, const uam::RiskMap& m,
                             const uam::AircraftPerformance& perf) {
  uam::PlanningGraph graph(q, m, perf);
  double total = graph.node_penalty(cells.front());
  for (std::size_t n = 1; n < cells.size(); ++n) total += graph.edge_cost(cells[n - 1], cells[n]) + graph.node_penalty(cells[n]);
  return total;
}

}  // namespace oracle

namespace fixture {

// Permissive aircraft so that small synthetic grids sit inside the altitude window.
inline uam::AircraftPerformance open_aircraft() {
  uam::AircraftPerformance p;
  p.h_min = 0.0;
  p.h_max = 1e4;
  p.max_range = 1e7;
  return p;
}

inline uam::TrackQuery open_query(const uam::CellIndex& o, const uam::CellIndex& d) {
  uam::TrackQuery q;
  q.origin = o;
  q.destination = d;
  q.airspace_min = 0.0;
  q.airspace_max = 1e4;
  q.clearance = 0.0;
  q.penalty = 0.0;
  q.payload = 0.0;
  q.wind = 0.0;
  q.risk_unit = 1e-7;
  return q;
}

// Random a x b x c map with continuous risk below the threshold and ~`blocked` obstacle cells.
inline uam::RiskMap random_map(std::mt19937_64& rng, int a, int b, int c, double blocked, double cell = 10.0) {
  auto m = uam::RiskMap::uniform(uam::GridSpec::from_counts(a, b, c, cell, cell, cell), 0.0, 1e-7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 1; i <= a; ++i)
    for (int j = 1; j <= b; ++j)
      for (int k = 1; k <= c; ++k) {
        if (u(rng) < blocked) {
          m.set_blocked({i, j, k});
        } else {
          m.set_risk({i, j, k}, u(rng) * 1e-7);
        }
      }
  return m;
}

inline uam::CellIndex random_free_cell(std::mt19937_64& rng, const uam::RiskMap& m) {
  std::uniform_int_distribution<int> di(1, m.grid.a()), dj(1, m.grid.b()), dk(1, m.grid.c());
  while (true) {
    const uam::CellIndex c{di(rng), dj(rng), dk(rng)};
    if (!m.is_unsafe(c)) return c;
  }
}

// Two flights on one aircraft-free toy network: the minimal instance the scheduler tests use.
inline uam::FleetScenario crossing_pair(double dep_a, double dep_b, int cap = 270) {
  uam::FleetScenario s;
  s.grid = uam::GridSpec(50, 50, 30, 1000, 1000, 330);
  s.network.vertiports = {{"A", 25, 525}, {"B", 975, 525}, {"C", 525, 25}, {"D", 525, 975}};
  s.network.routes = {{0, 1, 950}, {2, 3, 950}};
  s.regulations.T_f = 28800;
  s.aircraft = {{1, 0, 25.0, true}, {2, 1, 25.0, true}};
  uam::FlightPlan f{};
  f.aircraft = 0;
  f.flight = 1;
  f.route = 0;
  f.direction = uam::Direction::kOutbound;
  f.forward = true;
  f.departure = dep_a;
  f.duration = 38;
  f.cap = cap;
  s.flights.push_back(f);
  f.aircraft = 1;
  f.route = 1;
  f.departure = dep_b;
  s.flights.push_back(f);
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("uam_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixture
