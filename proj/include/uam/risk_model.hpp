#pragma once

// Operational risk of an aircraft failure over each cell, for three exposed groups:
// people on the ground, road vehicles, and small multi-rotor UAVs sharing the airspace.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"

namespace uam {

struct FallParams {
  double failure_rate = 6.04e-5;   // lambda, 1/h
  double empty_mass = 400.0;       // kg
  double payload_mass = 220.0;     // kg
  double crash_diameter = 6.0;     // m
  double gravity = 9.8;            // m/s^2
  double drag_coefficient = 0.3;   // R_I
  double air_density = 1.225;      // kg/m^3
  double alpha = 1e6;              // J, impact energy at shelter 0.5
  double beta = 232.0;             // J, fatality threshold energy

  double total_mass() const { return empty_mass + payload_mass; }
  double crash_area() const { return std::numbers::pi * crash_diameter * crash_diameter / 4.0; }

  void validate() const {
    if (!(failure_rate > 0 && empty_mass > 0 && payload_mass >= 0 && crash_diameter > 0 && gravity > 0 &&
          drag_coefficient > 0 && air_density > 0 && alpha > 0 && beta > 0)) {
      throw ValidationError("fall parameters must be positive (payload may be zero)");
    }
    if (!(beta < alpha)) throw ValidationError("fatality threshold beta must be below alpha");
  }
};

enum class AngleMode { kFixed, kIntegrated };

struct UavCollisionParams {
  double box_length = 5.63;   // e_l, m
  double box_width = 5.63;    // e_w, m
  double box_height = 1.855;  // e_h, m
  double uav_speed = 6.0;     // v_U, m/s
  double aircraft_speed_min = 10.0;          // m/s
  double aircraft_speed_max = 130.0 / 3.6;   // m/s
  double exposure_time = 2.0;                // s
  AngleMode mode = AngleMode::kFixed;
  double theta = std::numbers::pi / 6.0;
  double gamma = std::numbers::pi / 2.0;
  double epsilon = std::numbers::pi / 2.0;
  int quadrature_nodes = 16;

  void validate() const {
    if (!(box_length > 0 && box_width > 0 && box_height > 0)) throw ValidationError("collision box must be positive");
    if (!(aircraft_speed_min < aircraft_speed_max)) throw ValidationError("aircraft speed range is empty");
    if (!(exposure_time > 0)) throw ValidationError("exposure time must be positive");
    if (!(uav_speed >= 0)) throw ValidationError("UAV speed must be >= 0");
    if (quadrature_nodes < 1) throw ValidationError("quadrature needs at least one node per axis");
  }
};

// Shelter factor from the column's building height.
struct ShieldingRule {
  double height_threshold = 15.0;
  double low = 0.5;
  double high = 0.75;

  double operator()(double building_height) const { return building_height <= height_threshold ? low : high; }
};

struct LayerBand {
  std::string name;
  double z_lo = 0.0;
  double z_hi = 0.0;
};

struct RiskParams {
  FallParams fall;
  UavCollisionParams uav;
  ShieldingRule shielding;
  double vehicle_area = 9.68;  // S_v, m^2
  double w_personnel = 0.5;
  double w_vehicle = 0.3;
  double w_uav = 0.2;
  double threshold = 1e-7;     // R0
  std::vector<LayerBand> layers;

  void validate() const {
    fall.validate();
    uav.validate();
    if (w_personnel < 0 || w_vehicle < 0 || w_uav < 0) throw ValidationError("risk weights must be >= 0");
    if (!(vehicle_area > 0)) throw ValidationError("vehicle area must be positive");
    if (!(threshold >= 0)) throw ValidationError("risk threshold must be >= 0");
  }
};

inline constexpr double kShelterEpsilon = 1e-6;

inline double terminal_velocity(const FallParams& p) {
  return std::sqrt(2.0 * p.total_mass() * p.gravity / (p.drag_coefficient * p.air_density * p.crash_area()));
}

// Ground-impact speed after a quadratic-drag fall from rest through h_drop metres.
inline double impact_velocity(double h_drop, const FallParams& p) {
  if (h_drop < 0.0) throw DomainError("drop height must be >= 0");
  const double k = p.drag_coefficient * p.air_density * p.crash_area();
  const double m = p.total_mass();
  return std::sqrt(2.0 * m * p.gravity / k * (1.0 - std::exp(-h_drop * k / m)));
}

inline double impact_energy(double v, const FallParams& p) {
  if (v < 0.0) throw DomainError("impact speed must be >= 0");
  return 0.5 * p.total_mass() * v * v;
}

inline double fatality_probability(double energy, double shelter, const FallParams& p) {
  if (energy < 0.0 || shelter < 0.0 || shelter > 1.0) throw DomainError("fatality probability: E >= 0 and c_s in [0,1]");
  const double ratio = std::sqrt(p.alpha / p.beta);
  if (shelter <= kShelterEpsilon) {
    if (energy > p.beta) return 1.0;
    if (energy < p.beta) return 0.0;
    return 1.0 / (1.0 + ratio);
  }
  if (energy == 0.0) return 0.0;
  const double scale = std::pow(p.beta / energy, 1.0 / (4.0 * shelter));
  if (!std::isfinite(scale)) return 0.0;
  return 1.0 / (1.0 + ratio * scale);
}

inline double personnel_exposed(double population_density, const FallParams& p) {
  return population_density * p.crash_area();
}

inline double personnel_risk(double h_drop, double population_density, double shelter, const FallParams& p) {
  if (population_density < 0.0) throw DomainError("population density must be >= 0");
  const double e = impact_energy(impact_velocity(h_drop, p), p);
  return p.failure_rate * personnel_exposed(population_density, p) * fatality_probability(e, shelter, p);
}

inline double vehicle_collision_probability(const RoadInfo& road, double vehicle_area) {
  return vehicle_area * road.traffic_density / road.width;
}

inline double vehicle_risk(const std::optional<RoadInfo>& road, double vehicle_area, double failure_rate) {
  if (!road) return 0.0;
  if (!(road->width > 0.0)) throw DomainError("road width must be positive");
  const double exposed = road->traffic_density * road->length_per_cell;
  return failure_rate * exposed * vehicle_collision_probability(*road, vehicle_area);
}

// Closing speed between the aircraft and a UAV for the given attitude angles.
inline double relative_velocity(double v_e, double v_u, double theta, double gamma, double eps) {
  const double s = v_e * v_e + v_u * v_u +
                   2.0 * v_e * v_u * (std::cos(theta) * std::cos(gamma) * std::cos(eps) - std::sin(theta) * std::sin(gamma));
  return std::sqrt(std::max(0.0, s));
}

// Fixed mode evaluates the closing speed at the configured angles and mid-range aircraft
// speed. Integrated mode averages it over exposure time, aircraft speed, gamma in
// [-pi/2, pi/2] and epsilon in [0, pi] with composite midpoint quadrature.
inline double mean_relative_velocity(const UavCollisionParams& u) {
  u.validate();
  if (u.mode == AngleMode::kFixed) {
    const double v_e = 0.5 * (u.aircraft_speed_min + u.aircraft_speed_max);
    return relative_velocity(v_e, u.uav_speed, u.theta, u.gamma, u.epsilon);
  }
  const int n = u.quadrature_nodes;
  const double pi = std::numbers::pi;
  const double hv = (u.aircraft_speed_max - u.aircraft_speed_min) / n;
  const double hg = pi / n, he = pi / n, ht = u.exposure_time / n;
  double sum = 0.0;
  for (int it = 0; it < n; ++it) {
    double sum_t = 0.0;
    for (int iv = 0; iv < n; ++iv) {
      const double v_e = u.aircraft_speed_min + (iv + 0.5) * hv;
      for (int ig = 0; ig < n; ++ig) {
        const double g = -pi / 2.0 + (ig + 0.5) * hg;
        for (int ie = 0; ie < n; ++ie) {
          const double e = (ie + 0.5) * he;
          sum_t += relative_velocity(v_e, u.uav_speed, u.theta, g, e);
        }
      }
    }
    sum += sum_t * ht;
  }
  const double volume = u.exposure_time * (u.aircraft_speed_max - u.aircraft_speed_min) * pi * pi;
  const double mean = sum * hv * hg * he / volume;
  if (!std::isfinite(mean)) throw NumericalError("non-finite mean relative velocity");
  return mean;
}

inline double swept_volume(const UavCollisionParams& u, double mean_rel_velocity) {
  return u.box_width * u.box_height * (mean_rel_velocity * u.exposure_time + u.box_length);
}

inline double uav_risk(const UavCollisionParams& u, double uav_density, double failure_rate,
                       std::optional<double> mean_rel_velocity = std::nullopt) {
  if (uav_density < 0.0) throw DomainError("UAV density must be >= 0");
  const double vr = mean_rel_velocity ? *mean_rel_velocity : mean_relative_velocity(u);
  return failure_rate * uav_density * swept_volume(u, vr);
}

struct RiskComponents {
  double personnel = 0.0;
  double vehicle = 0.0;
  double uav = 0.0;
  double total = 0.0;
};

// Weighted group risk for one cell. The fall height is the cell-centre altitude above the
// local rooftop, clamped at zero.
inline RiskComponents aggregate_risk(const CellIndex& cell, const UrbanScene& scene, const RiskParams& params,
                                     std::optional<double> mean_rel_velocity = std::nullopt) {
  const Point3 c = cell_center(cell, scene.grid);
  const auto col = scene.grid.column(cell.i, cell.j);
  const double roof = scene.building_height[col];
  const double h_drop = std::max(0.0, c.z - roof);
  RiskComponents r;
  r.personnel = personnel_risk(h_drop, scene.population_density[col], params.shielding(roof), params.fall);
  r.vehicle = vehicle_risk(scene.road[col], params.vehicle_area, params.fall.failure_rate);
  r.uav = uav_risk(params.uav, scene.uav_density, params.fall.failure_rate, mean_rel_velocity);
  r.total = params.w_personnel * r.personnel + params.w_vehicle * r.vehicle + params.w_uav * r.uav;
  return r;
}

// Three bands of equal whole-layer height spanning [z_lo, z_hi].
inline std::vector<LayerBand> default_layer_bands(double z_lo, double z_hi, double dz) {
  const double per = std::max(dz, std::round((z_hi - z_lo) / 3.0 / dz) * dz);
  std::vector<LayerBand> bands;
  const char* names[] = {"lower", "middle", "upper"};
  for (int n = 0; n < 3; ++n) {
    const double lo = z_lo + n * per;
    const double hi = n == 2 ? z_hi : lo + per;
    bands.push_back({names[n], lo, hi});
  }
  return bands;
}

struct RiskMap {
  GridSpec grid;
  double threshold = 1e-7;
  std::vector<double> risk;            // continuous R per cell
  std::vector<std::uint8_t> unsafe;    // binarised flag per cell
  std::vector<std::uint8_t> blocked;   // obstacle or no-fly, independent of R
  std::vector<std::string> layer_of;   // per k, 1-based at [k-1]

  double at(const CellIndex& c) const { return risk[grid.linear(c)]; }
  bool is_unsafe(const CellIndex& c) const { return unsafe[grid.linear(c)] != 0; }
  bool is_blocked(const CellIndex& c) const { return blocked[grid.linear(c)] != 0; }

  // Out-of-grid cells count as unsafe.
  int flag(const CellIndex& c) const { return grid.valid(c) ? unsafe[grid.linear(c)] : 1; }

  std::uint8_t binarize(std::size_t n) const { return (risk[n] > threshold || blocked[n]) ? 1 : 0; }

  std::size_t unsafe_in_layer(int k) const {
    std::size_t count = 0;
    for (int i = 1; i <= grid.a(); ++i)
      for (int j = 1; j <= grid.b(); ++j) count += unsafe[grid.linear({i, j, k})];
    return count;
  }

  // Uniform-risk map over an empty grid; used for tests and synthetic planning fixtures.
  static RiskMap uniform(const GridSpec& grid, double r = 0.0, double threshold = 1e-7) {
    RiskMap m;
    m.grid = grid;
    m.threshold = threshold;
    m.risk.assign(grid.cell_count(), r);
    m.blocked.assign(grid.cell_count(), 0);
    m.unsafe.assign(grid.cell_count(), 0);
    for (std::size_t n = 0; n < m.risk.size(); ++n) m.unsafe[n] = m.binarize(n);
    m.layer_of.assign(grid.c(), "none");
    return m;
  }

  void set_blocked(const CellIndex& c, bool b = true) {
    const auto n = grid.linear(c);
    blocked[n] = b ? 1 : 0;
    unsafe[n] = binarize(n);
  }
  void set_risk(const CellIndex& c, double r) {
    const auto n = grid.linear(c);
    risk[n] = r;
    unsafe[n] = binarize(n);
  }
};

inline RiskMap build_risk_map(const UrbanScene& scene, const RiskParams& params) {
  params.validate();
  scene.validate();
  const GridSpec& g = scene.grid;
  RiskMap m;
  m.grid = g;
  m.threshold = params.threshold;
  m.risk.assign(g.cell_count(), 0.0);
  m.unsafe.assign(g.cell_count(), 0);
  m.blocked.assign(g.cell_count(), 0);
  const double vr = mean_relative_velocity(params.uav);
  for (std::size_t n = 0; n < g.cell_count(); ++n) {
    const CellIndex c = g.from_linear(n);
    m.risk[n] = aggregate_risk(c, scene, params, vr).total;
    m.blocked[n] = (scene.is_obstacle(c) || scene.is_no_fly(c)) ? 1 : 0;
    m.unsafe[n] = m.binarize(n);
  }
  m.layer_of.assign(g.c(), "none");
  for (int k = 1; k <= g.c(); ++k) {
    const double z = (k - 0.5) * g.dz();
    for (const auto& band : params.layers) {
      if (z >= band.z_lo && z < band.z_hi) {
        m.layer_of[k - 1] = band.name;
        break;
      }
    }
  }
  return m;
}

inline nlohmann::json risk_map_to_json(const RiskMap& m) {
  nlohmann::json j;
  const auto& g = m.grid;
  j["grid"] = {{"dx", g.dx()}, {"dy", g.dy()}, {"dz", g.dz()}, {"x_max", g.x_max()}, {"y_max", g.y_max()},
               {"z_max", g.z_max()}, {"a", g.a()}, {"b", g.b()}, {"c", g.c()}};
  j["order"] = "k-major, then i, then j";
  j["threshold"] = m.threshold;
  j["R"] = m.risk;
  std::vector<int> flags(m.unsafe.begin(), m.unsafe.end());
  j["R_bar"] = flags;
  j["blocked"] = std::vector<int>(m.blocked.begin(), m.blocked.end());
  j["layers"] = m.layer_of;
  return j;
}

inline RiskMap risk_map_from_json(const nlohmann::json& j) {
  RiskMap m;
  try {
    const auto& g = j.at("grid");
    m.grid = GridSpec(g.at("dx").get<double>(), g.at("dy").get<double>(), g.at("dz").get<double>(),
                      g.at("x_max").get<double>(), g.at("y_max").get<double>(), g.at("z_max").get<double>());
    m.threshold = j.at("threshold").get<double>();
    m.risk = j.at("R").get<std::vector<double>>();
    const auto flags = j.at("R_bar").get<std::vector<int>>();
    m.unsafe.assign(flags.begin(), flags.end());
    m.layer_of = j.value("layers", std::vector<std::string>(m.grid.c(), "none"));
    if (j.contains("blocked")) {
      const auto b = j.at("blocked").get<std::vector<int>>();
      m.blocked.assign(b.begin(), b.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("risk map: ") + e.what());
  }
  if (m.risk.size() != m.grid.cell_count() || m.unsafe.size() != m.grid.cell_count())
    throw IngestionError("risk map arrays do not match grid");
  if (m.blocked.empty()) {
    // Without explicit flags, cells unsafe below the threshold must be obstacles or no-fly.
    m.blocked.assign(m.grid.cell_count(), 0);
    for (std::size_t n = 0; n < m.risk.size(); ++n)
      m.blocked[n] = (m.unsafe[n] && !(m.risk[n] > m.threshold)) ? 1 : 0;
  }
  if (m.blocked.size() != m.grid.cell_count()) throw IngestionError("risk map arrays do not match grid");
  return m;
}

inline void write_layer_csv(std::ostream& out, const RiskMap& m, int k) {
  out << "i,j,x,y,z,R,R_bar\n";
  char buf[64];
  for (int i = 1; i <= m.grid.a(); ++i)
    for (int j = 1; j <= m.grid.b(); ++j) {
      const CellIndex c{i, j, k};
      const Point3 p = cell_center(c, m.grid);
      std::snprintf(buf, sizeof buf, "%.6e", m.at(c));
      out << i << ',' << j << ',' << p.x << ',' << p.y << ',' << p.z << ',' << buf << ',' << m.flag(c) << '\n';
    }
}

}  // namespace uam
