#pragma once

// Multi-aircraft flight scheduling over a route network.
//
// Each flight flies a straight route at a direction-dependent cruise altitude. Conflicts
// are detected on cell occupancy with a 3x3x3 detection zone. A resolution order is swept
// flight by flight; each flight takes the smallest conflict-free delay (in fixed quanta)
// that keeps its turnaround, cap and end-of-day limits, and is cancelled otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"
#include "uam/geometry.hpp"
#include "uam/occupancy.hpp"

namespace uam {

struct Vertiport {
  std::string name;
  double x = 0.0;  // m
  double y = 0.0;  // m
};

struct Route {
  int from = 0;  // vertiport index
  int to = 0;
  double length = 0.0;  // published length, m
};

struct RouteNetwork {
  std::vector<Vertiport> vertiports;
  std::vector<Route> routes;
  double forward_altitude = 105.0;  // from -> to
  double reverse_altitude = 165.0;  // to -> from

  int find(const std::string& name) const {
    for (std::size_t n = 0; n < vertiports.size(); ++n)
      if (vertiports[n].name == name) return static_cast<int>(n);
    throw ConfigError("unknown vertiport '" + name + "'");
  }

  std::string route_name(int r) const {
    return vertiports.at(routes.at(r).from).name + "-" + vertiports.at(routes.at(r).to).name;
  }

  double geometric_length(int r) const {
    const auto& a = vertiports.at(routes.at(r).from);
    const auto& b = vertiports.at(routes.at(r).to);
    return std::hypot(b.x - a.x, b.y - a.y);
  }

  std::vector<Point3> track(int r, bool forward) const {
    const auto& a = vertiports.at(routes.at(r).from);
    const auto& b = vertiports.at(routes.at(r).to);
    const double z = forward ? forward_altitude : reverse_altitude;
    Point3 p{a.x, a.y, z}, q{b.x, b.y, z};
    if (!forward) std::swap(p, q);
    return {p, q};
  }

  void validate() const {
    if (vertiports.empty() || routes.empty()) throw ConfigError("route network needs vertiports and routes");
    for (std::size_t r = 0; r < routes.size(); ++r) {
      const auto& rt = routes[r];
      if (rt.from < 0 || rt.to < 0 || rt.from >= static_cast<int>(vertiports.size()) ||
          rt.to >= static_cast<int>(vertiports.size()) || rt.from == rt.to) {
        throw ConfigError("route " + std::to_string(r) + " references invalid vertiports");
      }
      if (!(rt.length > 0)) throw ConfigError("route " + route_name(static_cast<int>(r)) + " has no length");
      const double geo = geometric_length(static_cast<int>(r));
      if (std::abs(geo - rt.length) > 0.01 * rt.length) {
        throw ConfigError("route " + route_name(static_cast<int>(r)) + " length " + std::to_string(rt.length) +
                          " differs from geometry " + std::to_string(geo) + " by more than 1%");
      }
    }
  }
};

// Five vertiports joined pairwise by ten routes, coordinates in metres.
inline RouteNetwork five_vertiport_network() {
  RouteNetwork net;
  net.vertiports = {{"V1", 300, 300}, {"V2", 300, 4220}, {"V3", 2220, 300}, {"V4", 2220, 4220}, {"V5", 1260, 2260}};
  const std::vector<std::tuple<int, int, double>> lengths = {{0, 1, 3920}, {0, 2, 1920}, {0, 3, 4365}, {0, 4, 2183},
                                                            {1, 2, 4365}, {1, 3, 1920}, {1, 4, 2183}, {2, 3, 3920},
                                                            {2, 4, 2183}, {3, 4, 2183}};
  for (const auto& [a, b, l] : lengths) net.routes.push_back({a, b, l});
  return net;
}

enum class Direction { kOutbound, kInbound };

struct Aircraft {
  int id = 0;
  int route = 0;
  double speed = 25.0;     // m/s
  bool home_at_from = true;
};

struct Regulations {
  double T_s = 0.0;
  double T_f = 28800.0;
  double T_D = 240.0;
  double T_R = 360.0;
  double chi = 0.3;
  int quantum = 10;  // delay step, s

  // Minimum ground time after flight f (1-based).
  double turnaround(int f) const { return f % 2 == 1 ? T_D : T_R; }

  void validate() const {
    if (!(T_D < T_R)) throw ConfigError("outbound turnaround T_D must be shorter than inbound T_R");
    if (!(T_f > T_s)) throw ConfigError("service window must satisfy T_f > T_s");
    if (quantum <= 0) throw ConfigError("delay quantum must be positive");
  }
};

struct FlightPlan {
  int aircraft = 0;       // index into FleetScenario::aircraft
  int flight = 1;         // 1-based per aircraft
  int route = 0;
  Direction direction = Direction::kOutbound;
  bool forward = true;    // flown from -> to
  double departure = 0.0; // planned, s
  double duration = 0.0;  // round(L/v), s
  int cap = 0;            // maximum delay, s

  double planned_arrival() const { return departure + duration; }
};

inline int daily_flight_count(double T_s, double T_f, double L, double v, double T_D, double T_R, double chi) {
  if (!(T_f > T_s)) throw ConfigError("service window must satisfy T_f > T_s");
  if (!(v > 0)) throw ConfigError("speed must be > 0");
  const double denom = 2.0 * std::round(L / v) + T_D + T_R + chi;
  if (!(denom > 0)) throw ConfigError("round-trip time must be positive");
  return static_cast<int>(std::floor((T_f - T_s) / denom)) * 2;
}

struct FleetGenerator {
  int aircraft_per_route = 2;
  int flights_per_aircraft = 6;
  double speed = 25.0;
  std::uint64_t seed = 1;
  double first_departure_min = 0.0;
  double first_departure_max = 900.0;
  double slack_max = 120.0;  // extra ground time beyond the turnaround, s
  int delay_cap = 0;         // 0: the largest cap the regulations allow
  bool alternate_homes = true;
};

struct FleetScenario {
  GridSpec grid;
  RouteNetwork network;
  Regulations regulations;
  std::vector<Aircraft> aircraft;
  std::vector<FlightPlan> flights;  // sorted by (aircraft, flight)
  std::optional<FleetGenerator> generator;

  int aircraft_count() const { return static_cast<int>(aircraft.size()); }

  std::vector<Point3> track(const FlightPlan& f) const { return network.track(f.route, f.forward); }

  std::string flight_name(std::size_t n) const {
    const auto& f = flights.at(n);
    return "g" + std::to_string(aircraft.at(f.aircraft).id) + "f" + std::to_string(f.flight);
  }
};

namespace detail {
inline int quantize_down(double v, int q) { return static_cast<int>(std::floor(v / q + 1e-9)) * q; }
inline int quantize_up(double v, int q) { return static_cast<int>(std::ceil(v / q - 1e-9)) * q; }

inline void sort_flights(FleetScenario& s) {
  std::stable_sort(s.flights.begin(), s.flights.end(), [](const FlightPlan& a, const FlightPlan& b) {
    return std::tie(a.aircraft, a.flight) < std::tie(b.aircraft, b.flight);
  });
}

inline int regulation_cap(const FleetScenario& s, const FlightPlan& f) {
  return detail::quantize_down(f.duration + s.regulations.turnaround(f.flight), s.regulations.quantum);
}
}  // namespace detail

inline void validate_scenario(const FleetScenario& s) {
  s.regulations.validate();
  s.network.validate();
  for (const auto& v : s.network.vertiports) {
    for (double z : {s.network.forward_altitude, s.network.reverse_altitude}) {
      if (v.x < 0 || v.y < 0 || v.x > s.grid.x_max() || v.y > s.grid.y_max() || z < 0 || z > s.grid.z_max())
        throw ConfigError("vertiport " + v.name + " lies outside the grid");
    }
  }
  for (const auto& a : s.aircraft) {
    if (a.route < 0 || a.route >= static_cast<int>(s.network.routes.size()))
      throw ConfigError("aircraft " + std::to_string(a.id) + " flies an unknown route");
    if (!(a.speed > 0)) throw ConfigError("aircraft " + std::to_string(a.id) + " has no speed");
  }
  for (std::size_t n = 0; n < s.flights.size(); ++n) {
    const auto& f = s.flights[n];
    if (f.aircraft < 0 || f.aircraft >= s.aircraft_count()) throw ConfigError("flight references unknown aircraft");
    if (f.cap < 0) throw ConfigError("flight " + s.flight_name(n) + " has a negative delay cap");
    if (f.cap > detail::regulation_cap(s, f))
      throw PlanError("flight " + s.flight_name(n) + " delay cap exceeds flight time plus turnaround");
    if (n > 0 && s.flights[n - 1].aircraft == f.aircraft && s.flights[n - 1].flight >= f.flight)
      throw ConfigError("flight numbers of aircraft " + std::to_string(s.aircraft[f.aircraft].id) + " are not increasing");
  }
}

// Rejects a base plan that cannot be flown without delays.
inline void check_base_plan(const FleetScenario& s) {
  validate_scenario(s);
  const auto& reg = s.regulations;
  for (std::size_t n = 0; n < s.flights.size(); ++n) {
    const auto& f = s.flights[n];
    if (f.departure < reg.T_s) throw PlanError("flight " + s.flight_name(n) + " departs before T_s");
    if (f.planned_arrival() > reg.T_f) throw PlanError("flight " + s.flight_name(n) + " arrives after T_f");
    if (n + 1 < s.flights.size() && s.flights[n + 1].aircraft == f.aircraft) {
      const auto& next = s.flights[n + 1];
      if (next.departure - f.planned_arrival() < reg.turnaround(f.flight))
        throw PlanError("flight " + s.flight_name(n + 1) + " departs before the turnaround after " + s.flight_name(n));
    }
  }
}

inline FleetScenario generate_scenario(const GridSpec& grid, const RouteNetwork& net, const Regulations& reg,
                                       const FleetGenerator& gen) {
  if (gen.aircraft_per_route <= 0 || gen.flights_per_aircraft <= 0) throw ConfigError("generator counts must be > 0");
  if (!(gen.speed > 0)) throw ConfigError("generator speed must be > 0");
  if (gen.first_departure_max < gen.first_departure_min || gen.slack_max < 0)
    throw ConfigError("generator time windows are inverted");
  FleetScenario s{grid, net, reg, {}, {}, gen};
  std::mt19937_64 rng(gen.seed);
  const int q = reg.quantum;
  auto draw = [&](double lo, double hi) {
    std::uniform_int_distribution<int> d(detail::quantize_up(lo, q) / q, std::max(detail::quantize_up(lo, q),
                                                                                 detail::quantize_down(hi, q)) / q);
    return static_cast<double>(d(rng) * q);
  };
  for (std::size_t r = 0; r < net.routes.size(); ++r) {
    for (int a = 0; a < gen.aircraft_per_route; ++a) {
      Aircraft ac{static_cast<int>(s.aircraft.size()) + 1, static_cast<int>(r), gen.speed,
                  !gen.alternate_homes || a % 2 == 0};
      const int idx = static_cast<int>(s.aircraft.size());
      s.aircraft.push_back(ac);
      const double duration = std::round(net.routes[r].length / gen.speed);
      double dep = reg.T_s + draw(gen.first_departure_min, gen.first_departure_max);
      for (int f = 1; f <= gen.flights_per_aircraft; ++f) {
        FlightPlan fp;
        fp.aircraft = idx;
        fp.flight = f;
        fp.route = static_cast<int>(r);
        fp.direction = f % 2 == 1 ? Direction::kOutbound : Direction::kInbound;
        fp.forward = (fp.direction == Direction::kOutbound) == ac.home_at_from;
        fp.departure = dep;
        fp.duration = duration;
        const int reg_cap = detail::quantize_down(duration + reg.turnaround(f), q);
        fp.cap = gen.delay_cap > 0 ? std::min(gen.delay_cap, reg_cap) : reg_cap;
        if (fp.planned_arrival() > reg.T_f)
          throw ConfigError("service window too short for " + std::to_string(gen.flights_per_aircraft) + " flights per aircraft");
        s.flights.push_back(fp);
        dep = fp.planned_arrival() + reg.turnaround(f) + draw(0.0, gen.slack_max);
      }
    }
  }
  validate_scenario(s);
  return s;
}

// Relative occupancy per (route, direction, speed) and the conflict offsets between them.
class ConflictModel {
 public:
  explicit ConflictModel(const FleetScenario& s, int half_width = 1, double guard = 1e-6) : scenario_(&s) {
    std::map<std::tuple<int, bool, double>, int> keys;
    for (const auto& f : s.flights) {
      const double v = s.aircraft[f.aircraft].speed;
      const auto key = std::make_tuple(f.route, f.forward, v);
      auto it = keys.find(key);
      if (it == keys.end()) {
        it = keys.emplace(key, static_cast<int>(occ_.size())).first;
        const auto pts = s.network.track(f.route, f.forward);
        occ_.push_back(cell_occupancy(pts, waypoint_times(pts, 0.0, v), s.grid, half_width));
      }
      key_.push_back(it->second);
    }
    const std::size_t k = occ_.size();
    forbidden_.assign(k * k, {});
    hull_.assign(k * k, Interval{1.0, -1.0});
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        auto iv = forbidden_offsets(occ_[a], occ_[b]);
        for (auto& x : iv) x = {x.lo - guard, x.hi + guard};
        if (!iv.empty()) hull_[a * k + b] = {iv.front().lo, iv.back().hi};
        forbidden_[a * k + b] = std::move(iv);
      }
  }

  const FleetScenario& scenario() const { return *scenario_; }
  int key(std::size_t flight) const { return key_[flight]; }
  const Occupancy& relative(std::size_t flight) const { return occ_[key_[flight]]; }
  std::size_t key_count() const { return occ_.size(); }

  // Offsets dep_y - dep_x that put flights x and y in conflict.
  const std::vector<Interval>& forbidden(std::size_t x, std::size_t y) const {
    return forbidden_[key_[x] * occ_.size() + key_[y]];
  }
  const Interval& forbidden_hull(std::size_t x, std::size_t y) const {
    return hull_[key_[x] * occ_.size() + key_[y]];
  }

 private:
  const FleetScenario* scenario_;
  std::vector<Occupancy> occ_;
  std::vector<int> key_;
  std::vector<std::vector<Interval>> forbidden_;
  std::vector<Interval> hull_;
};

struct Schedule {
  std::vector<int> delay;       // s
  std::vector<char> operate;    // c
  std::vector<std::size_t> order;

  bool operator==(const Schedule&) const = default;
};

struct ScheduleMetrics {
  double T_d = 0.0;
  double W = 0.0;
  int S = 0;
  int cancelled = 0;
  int delayed = 0;
  long long total_delay = 0;
};

struct ObjectiveWeights {
  double w_delay = 0.6;    // omega_6
  double w_flights = 0.4;  // omega_7
};

inline ScheduleMetrics objective(const Schedule& s, int aircraft_count, const ObjectiveWeights& w = {}) {
  if (aircraft_count <= 0) throw DomainError("aircraft count must be > 0");
  ScheduleMetrics m;
  for (std::size_t n = 0; n < s.delay.size(); ++n) {
    if (!s.operate[n]) {
      ++m.cancelled;
      continue;
    }
    ++m.S;
    m.total_delay += s.delay[n];
    if (s.delay[n] > 0) ++m.delayed;
  }
  m.T_d = static_cast<double>(m.total_delay) / aircraft_count;
  m.W = w.w_delay * m.T_d - w.w_flights * m.S;
  return m;
}

inline ScheduleMetrics objective(const FleetScenario& sc, const Schedule& s, const ObjectiveWeights& w = {}) {
  return objective(s, sc.aircraft_count(), w);
}

// Planned-departure order, ties by aircraft and flight.
inline std::vector<std::size_t> departure_order(const FleetScenario& s) {
  std::vector<std::size_t> order(s.flights.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = s.flights[a];
    const auto& y = s.flights[b];
    return std::tie(x.departure, s.aircraft[x.aircraft].id, x.flight) <
           std::tie(y.departure, s.aircraft[y.aircraft].id, y.flight);
  });
  return order;
}

namespace detail {

// Index of flight (aircraft, flight +/- 1) in the sorted flight list, or -1.
inline std::vector<std::pair<long, long>> sibling_table(const FleetScenario& s) {
  std::vector<std::pair<long, long>> sib(s.flights.size(), {-1, -1});
  for (std::size_t n = 0; n + 1 < s.flights.size(); ++n) {
    if (s.flights[n].aircraft == s.flights[n + 1].aircraft) {
      sib[n].second = static_cast<long>(n + 1);
      sib[n + 1].first = static_cast<long>(n);
    }
  }
  return sib;
}

class Resolver {
 public:
  explicit Resolver(const ConflictModel& model)
      : model_(model), s_(model.scenario()), sib_(sibling_table(s_)), scheduled_(s_.flights.size(), 0) {}

  void reset() {
    std::fill(scheduled_.begin(), scheduled_.end(), 0);
    active_.clear();
  }

  void mark(std::size_t n, const Schedule& sched) {
    scheduled_[n] = 1;
    if (sched.operate[n]) active_.push_back(n);
  }

  // Sets delay/operate of flight `cur` given everything marked so far.
  void resolve(std::size_t cur, int preferred, Schedule& sched) {
    const auto& reg = s_.regulations;
    const auto& f = s_.flights[cur];
    const int q = reg.quantum;
    double lb = 0.0;
    double ub = f.cap;
    ub = std::min(ub, reg.T_f - f.planned_arrival());
    if (const long p = sib_[cur].first; p >= 0 && scheduled_[p] && sched.operate[p]) {
      const auto& pf = s_.flights[p];
      lb = std::max(lb, pf.planned_arrival() + sched.delay[p] + reg.turnaround(pf.flight) - f.departure);
    }
    if (const long nx = sib_[cur].second; nx >= 0 && scheduled_[nx] && sched.operate[nx]) {
      const auto& nf = s_.flights[nx];
      ub = std::min(ub, nf.departure + sched.delay[nx] - reg.turnaround(f.flight) - f.planned_arrival());
    }
    const int lo = quantize_up(lb, q);
    const int hi = quantize_down(ub, q);
    if (lo > hi) {
      cancel(cur, sched);
      return;
    }
    blocked_.clear();
    for (std::size_t x : active_) {
      if (s_.flights[x].aircraft == f.aircraft) continue;
      const Interval& h = model_.forbidden_hull(x, cur);
      if (h.lo > h.hi) continue;
      const double base = s_.flights[x].departure + sched.delay[x] - f.departure;
      if (h.hi + base < lo || h.lo + base > hi) continue;
      for (const auto& iv : model_.forbidden(x, cur)) blocked_.push_back(iv.shifted(base));
    }
    std::sort(blocked_.begin(), blocked_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    auto earliest = [&](int start) {
      int d = start;
      for (const auto& iv : blocked_) {
        if (iv.hi < d) continue;
        if (iv.lo > d) break;
        d = static_cast<int>(std::floor(iv.hi / q) + 1) * q;
      }
      return d;
    };
    const int want = std::max(lo, quantize_up(std::max(preferred, 0), q));
    int d = want <= hi ? earliest(want) : hi + q;
    if (d > hi) d = earliest(lo);
    if (d > hi) {
      cancel(cur, sched);
      return;
    }
    sched.delay[cur] = d;
    sched.operate[cur] = 1;
  }

 private:
  static void cancel(std::size_t cur, Schedule& sched) {
    sched.delay[cur] = 0;
    sched.operate[cur] = 0;
  }

  const ConflictModel& model_;
  const FleetScenario& s_;
  std::vector<std::pair<long, long>> sib_;
  std::vector<char> scheduled_;
  std::vector<std::size_t> active_;
  std::vector<Interval> blocked_;
};

}  // namespace detail

// Adds the smallest quantised delay that clears every already-scheduled predecessor, or
// cancels the flight when no admissible delay exists.
inline void resolve_pairwise(const ConflictModel& model, std::size_t current,
                             const std::vector<std::size_t>& predecessors, Schedule& sched, int preferred = 0) {
  detail::Resolver r(model);
  for (std::size_t p : predecessors) r.mark(p, sched);
  r.resolve(current, preferred, sched);
}

// Sweeps flights in `order`, each taking its preferred delay if conflict-free.
inline Schedule decode_schedule(const ConflictModel& model, const std::vector<std::size_t>& order,
                                const std::vector<int>& preferred) {
  const FleetScenario& s = model.scenario();
  const std::size_t n = s.flights.size();
  if (order.size() != n || preferred.size() != n) throw DomainError("order/delay vectors do not match the flight list");
  Schedule sched{std::vector<int>(n, 0), std::vector<char>(n, 0), order};
  detail::Resolver r(model);
  for (std::size_t cur : order) {
    if (cur >= n) throw DomainError("resolution order is not a permutation");
    r.resolve(cur, preferred[cur], sched);
    r.mark(cur, sched);
  }
  return sched;
}

inline Schedule build_initial_schedule(const ConflictModel& model, const std::vector<std::size_t>& order) {
  check_base_plan(model.scenario());
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t n = 0; n < sorted.size(); ++n)
    if (sorted[n] != n) throw DomainError("resolution order is not a permutation");
  return decode_schedule(model, order, std::vector<int>(order.size(), 0));
}

inline Schedule build_initial_schedule(const ConflictModel& model) {
  return build_initial_schedule(model, departure_order(model.scenario()));
}

struct ConflictRecord {
  std::size_t a = 0, b = 0;  // flight indices
  CellIndex cell;
  Interval overlap;
};

// Brute-force scan of the absolute occupancy table of all operating flights.
inline std::vector<ConflictRecord> audit_conflicts(const FleetScenario& s, const Schedule& sched, int half_width = 1) {
  struct Entry {
    std::size_t flight;
    Interval iv;
  };
  std::map<CellIndex, std::vector<Entry>> raw, zone;
  for (std::size_t n = 0; n < s.flights.size(); ++n) {
    if (!sched.operate[n]) continue;
    const auto& f = s.flights[n];
    const auto pts = s.track(f);
    const auto times = waypoint_times(pts, f.departure + sched.delay[n], s.aircraft[f.aircraft].speed);
    const Occupancy occ = cell_occupancy(pts, times, s.grid, half_width);
    for (const auto& [c, iv] : occ.raw) raw[c].push_back({n, iv});
    for (const auto& [c, iv] : occ.zone) zone[c].push_back({n, iv});
  }
  std::vector<ConflictRecord> out;
  for (const auto& [cell, zs] : zone) {
    const auto it = raw.find(cell);
    if (it == raw.end()) continue;
    for (const auto& z : zs)
      for (const auto& r : it->second) {
        if (s.flights[z.flight].aircraft == s.flights[r.flight].aircraft) continue;
        if (!z.iv.overlaps(r.iv)) continue;
        out.push_back({z.flight, r.flight, cell, {std::max(z.iv.lo, r.iv.lo), std::min(z.iv.hi, r.iv.hi)}});
      }
  }
  return out;
}

// Turnaround order, end-of-day limit, delay caps and sign of every operating flight.
inline std::vector<std::string> audit_regulations(const FleetScenario& s, const Schedule& sched) {
  std::vector<std::string> out;
  const auto& reg = s.regulations;
  if (!(reg.T_D < reg.T_R)) out.push_back("T_D >= T_R");
  for (std::size_t n = 0; n < s.flights.size(); ++n) {
    const auto& f = s.flights[n];
    const std::string name = s.flight_name(n);
    if (!sched.operate[n]) {
      if (sched.delay[n] != 0) out.push_back(name + ": cancelled flight carries a delay");
      continue;
    }
    const int d = sched.delay[n];
    if (d < 0) out.push_back(name + ": negative delay");
    if (d > f.cap) out.push_back(name + ": delay exceeds cap");
    if (f.departure + d < reg.T_s) out.push_back(name + ": departs before T_s");
    if (f.planned_arrival() + d > reg.T_f) out.push_back(name + ": arrives after T_f");
    if (n + 1 < s.flights.size() && s.flights[n + 1].aircraft == f.aircraft && sched.operate[n + 1]) {
      const auto& nf = s.flights[n + 1];
      if ((nf.departure + sched.delay[n + 1]) - (f.planned_arrival() + d) < reg.turnaround(f.flight))
        out.push_back(s.flight_name(n + 1) + ": turnaround after " + name + " too short");
    }
  }
  return out;
}

// ---- scenario files ----

inline nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"dx", g.dx()}, {"dy", g.dy()}, {"dz", g.dz()}, {"x_max", g.x_max()}, {"y_max", g.y_max()}, {"z_max", g.z_max()}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  try {
    return GridSpec(j.at("dx").get<double>(), j.at("dy").get<double>(), j.at("dz").get<double>(),
                    j.at("x_max").get<double>(), j.at("y_max").get<double>(), j.at("z_max").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

inline nlohmann::json network_to_json(const RouteNetwork& net) {
  nlohmann::json vs = nlohmann::json::array(), rs = nlohmann::json::array();
  for (const auto& v : net.vertiports) vs.push_back({{"name", v.name}, {"x", v.x}, {"y", v.y}});
  for (const auto& r : net.routes)
    rs.push_back({{"from", net.vertiports[r.from].name}, {"to", net.vertiports[r.to].name}, {"length", r.length}});
  return {{"vertiports", vs}, {"routes", rs}, {"forward_altitude", net.forward_altitude},
          {"reverse_altitude", net.reverse_altitude}};
}

inline RouteNetwork network_from_json(const nlohmann::json& j) {
  RouteNetwork net;
  try {
    for (const auto& v : j.at("vertiports")) net.vertiports.push_back({v.at("name"), v.at("x"), v.at("y")});
    for (const auto& r : j.at("routes")) net.routes.push_back({net.find(r.at("from")), net.find(r.at("to")), r.at("length")});
    net.forward_altitude = j.value("forward_altitude", net.forward_altitude);
    net.reverse_altitude = j.value("reverse_altitude", net.reverse_altitude);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  return net;
}

inline nlohmann::json regulations_to_json(const Regulations& r) {
  return {{"T_s", r.T_s}, {"T_f", r.T_f}, {"T_D", r.T_D}, {"T_R", r.T_R}, {"chi", r.chi}, {"delay_quantum", r.quantum}};
}

inline Regulations regulations_from_json(const nlohmann::json& j) {
  Regulations r;
  try {
    r.T_s = j.value("T_s", r.T_s);
    r.T_f = j.value("T_f", r.T_f);
    r.T_D = j.value("T_D", r.T_D);
    r.T_R = j.value("T_R", r.T_R);
    r.chi = j.value("chi", r.chi);
    r.quantum = j.value("delay_quantum", r.quantum);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("regulations: ") + e.what());
  }
  r.validate();
  return r;
}

inline nlohmann::json generator_to_json(const FleetGenerator& g) {
  return {{"aircraft_per_route", g.aircraft_per_route},
          {"flights_per_aircraft", g.flights_per_aircraft},
          {"speed", g.speed},
          {"seed", g.seed},
          {"first_departure", {g.first_departure_min, g.first_departure_max}},
          {"slack_max", g.slack_max},
          {"delay_cap", g.delay_cap},
          {"alternate_homes", g.alternate_homes}};
}

inline FleetGenerator generator_from_json(const nlohmann::json& j) {
  FleetGenerator g;
  try {
    g.aircraft_per_route = j.value("aircraft_per_route", g.aircraft_per_route);
    g.flights_per_aircraft = j.value("flights_per_aircraft", g.flights_per_aircraft);
    g.speed = j.value("speed", g.speed);
    g.seed = j.value("seed", g.seed);
    if (j.contains("first_departure")) {
      g.first_departure_min = j.at("first_departure").at(0);
      g.first_departure_max = j.at("first_departure").at(1);
    }
    g.slack_max = j.value("slack_max", g.slack_max);
    g.delay_cap = j.value("delay_cap", g.delay_cap);
    g.alternate_homes = j.value("alternate_homes", g.alternate_homes);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generate: ") + e.what());
  }
  return g;
}

// A scenario either lists aircraft and flights explicitly or carries a "generate" block.
inline FleetScenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("fleet scenario must be a JSON object");
  const GridSpec grid = grid_from_json(j.at("grid"));
  const RouteNetwork net = j.contains("network") ? network_from_json(j.at("network")) : five_vertiport_network();
  const Regulations reg = regulations_from_json(j.value("regulations", nlohmann::json::object()));
  if (j.contains("generate")) return generate_scenario(grid, net, reg, generator_from_json(j.at("generate")));
  FleetScenario s{grid, net, reg, {}, {}, std::nullopt};
  try {
    std::map<int, int> by_id;
    for (const auto& a : j.at("aircraft")) {
      Aircraft ac;
      ac.id = a.at("id");
      const std::string route = a.at("route");
      const auto dash = route.find('-');
      if (dash == std::string::npos) throw ConfigError("route names look like V1-V2");
      const int from = net.find(route.substr(0, dash)), to = net.find(route.substr(dash + 1));
      ac.route = -1;
      for (std::size_t r = 0; r < net.routes.size(); ++r)
        if (net.routes[r].from == from && net.routes[r].to == to) ac.route = static_cast<int>(r);
      if (ac.route < 0) throw ConfigError("unknown route " + route);
      ac.speed = a.value("speed", 25.0);
      ac.home_at_from = a.value("home", std::string("from")) == "from";
      by_id[ac.id] = static_cast<int>(s.aircraft.size());
      s.aircraft.push_back(ac);
    }
    for (const auto& fj : j.at("flights")) {
      FlightPlan f;
      const int id = fj.at("aircraft");
      if (!by_id.count(id)) throw ConfigError("flight references unknown aircraft " + std::to_string(id));
      f.aircraft = by_id[id];
      const Aircraft& ac = s.aircraft[f.aircraft];
      f.flight = fj.at("flight");
      if (f.flight < 1) throw ConfigError("flight numbers start at 1");
      f.route = ac.route;
      f.direction = f.flight % 2 == 1 ? Direction::kOutbound : Direction::kInbound;
      f.forward = (f.direction == Direction::kOutbound) == ac.home_at_from;
      f.departure = fj.at("departure");
      f.duration = std::round(net.routes[ac.route].length / ac.speed);
      f.cap = fj.contains("cap") ? fj.at("cap").get<int>() : detail::quantize_down(f.duration + reg.turnaround(f.flight), reg.quantum);
      s.flights.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fleet scenario: ") + e.what());
  }
  detail::sort_flights(s);
  validate_scenario(s);
  return s;
}

inline nlohmann::json scenario_to_json(const FleetScenario& s, bool expand = false) {
  nlohmann::json j{{"grid", grid_to_json(s.grid)},
                   {"network", network_to_json(s.network)},
                   {"regulations", regulations_to_json(s.regulations)}};
  if (s.generator && !expand) {
    j["generate"] = generator_to_json(*s.generator);
    return j;
  }
  nlohmann::json ac = nlohmann::json::array(), fl = nlohmann::json::array();
  for (const auto& a : s.aircraft)
    ac.push_back({{"id", a.id}, {"route", s.network.route_name(a.route)}, {"speed", a.speed},
                  {"home", a.home_at_from ? "from" : "to"}});
  for (const auto& f : s.flights)
    fl.push_back({{"aircraft", s.aircraft[f.aircraft].id}, {"flight", f.flight}, {"departure", f.departure}, {"cap", f.cap}});
  j["aircraft"] = ac;
  j["flights"] = fl;
  return j;
}

}  // namespace uam
