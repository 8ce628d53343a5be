#pragma once

// Bundled synthetic city used by the examples and the acceptance suite.
//
// 2.5 km x 4.5 km at 50 m columns with 30 m layers up to 330 m. Low-rise housing covers the
// city; a tall downtown sits in the north-west; a denser residential belt crosses the middle
// of the map; two crowded plazas, a few road segments and one low-altitude no-fly box are
// sprinkled around. Five vertiports sit at the corners and the centre.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "uam/airspace_grid.hpp"
#include "uam/fleet_scheduler.hpp"

namespace uam::demo {

namespace detail {
// Small integer hash so that heights do not depend on library distribution code.
inline std::uint32_t mix(std::uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}
inline std::uint32_t cell_hash(int i, int j) {
  return mix(static_cast<std::uint32_t>(i) * 73856093U ^ static_cast<std::uint32_t>(j) * 19349663U);
}
}  // namespace detail

inline constexpr int kColumnsX = 50;
inline constexpr int kColumnsY = 90;
inline constexpr double kCell = 50.0;

inline bool in_downtown(int i, int j) { return i >= 3 && i <= 15 && j >= 70 && j <= 86; }

inline HeightRaster raster() {
  HeightRaster r{kColumnsX, kColumnsY, kCell, kCell, {}};
  r.heights.reserve(static_cast<std::size_t>(kColumnsX) * kColumnsY);
  for (int i = 1; i <= kColumnsX; ++i)
    for (int j = 1; j <= kColumnsY; ++j) {
      const std::uint32_t h = detail::cell_hash(i, j);
      double height = 0.0;
      if (i % 4 != 0 && j % 4 != 0) {  // streets every fourth column
        height = in_downtown(i, j) ? 60.0 + static_cast<double>(h % 191) : 6.0 + static_cast<double>(h % 10);
      }
      r.heights.push_back(height);
    }
  return r;
}

inline SceneConfig scene_config() {
  SceneConfig cfg;
  cfg.dz = 30.0;
  cfg.z_max = 330.0;
  cfg.population_density = 1.0e-4;
  cfg.uav_density = 3.48e-8;
  cfg.population_zones = {
      {{5, 46}, {30, 50}, 3.0e-4},   // residential belt
      {{30, 34}, {14, 18}, 6.0e-4},  // plaza
      {{36, 40}, {56, 60}, 6.0e-4},  // plaza
  };
  RoadInfo road{0.07, 3.5, -1.0};
  cfg.roads = {
      {{14, 22}, {24, 24}, road},
      {{27, 27}, {62, 68}, road},
  };
  cfg.no_fly = {{{38, 46}, {20, 28}, {1, 6}}};
  return cfg;
}

inline UrbanScene scene() { return build_scene(raster(), scene_config()); }

inline GridSpec grid() { return GridSpec(kCell, kCell, 30.0, kColumnsX * kCell, kColumnsY * kCell, 330.0); }

inline nlohmann::json fleet_json() {
  FleetGenerator gen;
  gen.aircraft_per_route = 2;
  gen.flights_per_aircraft = 6;
  gen.speed = 25.0;
  gen.seed = 2024;
  gen.first_departure_min = 0.0;
  gen.first_departure_max = 1200.0;
  gen.slack_max = 300.0;
  gen.delay_cap = 0;
  return {{"grid", grid_to_json(grid())},
          {"network", network_to_json(five_vertiport_network())},
          {"regulations", regulations_to_json(Regulations{})},
          {"generate", generator_to_json(gen)}};
}

inline nlohmann::json experiment_json() {
  using nlohmann::json;
  return {
      {"scene", {{"raster", "city.raster"}, {"config", "city_scene.json"}}},
      {"risk", {{"threshold", 1e-7}, {"weights", {0.5, 0.3, 0.2}}, {"angle_mode", "fixed"}, {"payload_mass", 220.0}}},
      {"aircraft", json::object()},
      {"queries",
       {{{"name", "V1-V4"},
         {"origin", {300.0, 300.0, 120.0}},
         {"destination", {2220.0, 4220.0, 120.0}},
         {"w_risk", 0.5},
         {"w_transport", 0.5},
         {"airspace_min", 30.0},
         {"airspace_max", 300.0},
         {"clearance", 50.0},
         {"penalty", 100.0},
         {"payload", 80.0},
         {"wind", 5.0},
         {"risk_unit", 1e-5}}}},
      {"fleet", "fleet.json"},
      {"soa", {{"population", 50}, {"generations", 200}, {"seed", 1}}},
      {"sweep",
       {{"altitudes", {100.0, 160.0, 220.0}},
        {"cell_sizes", {{50.0, 50.0, 30.0}, {25.0, 25.0, 15.0}}},
        {"flights_per_aircraft", {4, 6}},
        {"speeds", {20.0, 30.0}},
        {"pareto_query", "V1-V4"},
        {"pareto_step", 0.1},
        {"replicates", 8}}},
  };
}

// Writes city.raster, city_scene.json, fleet.json and experiment.json into `dir`.
inline void write_files(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "city.raster");
    out << "# synthetic city, building heights in metres\n";
    write_raster(out, raster());
  }
  auto dump = [&](const char* name, const nlohmann::json& j) {
    std::ofstream out(dir / name);
    out << j.dump(2) << '\n';
  };
  dump("city_scene.json", to_json(scene_config()));
  dump("fleet.json", fleet_json());
  dump("experiment.json", experiment_json());
}

}  // namespace uam::demo
