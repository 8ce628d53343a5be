#pragma once

// Uniform 3D cell grid over the urban volume, plus the static scene that lives on it.
//
// Cells are addressed with 1-based (i, j, k) indices along x, y and z. Flat storage
// is layer-major: k, then i, then j, which makes every layer a row-major a x b
// slice with the same orientation as the scene raster.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uam/error.hpp"
#include "uam/geometry.hpp"

namespace uam {

struct CellIndex {
  int i = 1;
  int j = 1;
  int k = 1;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

inline std::string to_string(const CellIndex& c) {
  return "(" + std::to_string(c.i) + "," + std::to_string(c.j) + "," + std::to_string(c.k) + ")";
}

class GridSpec {
 public:
  GridSpec() = default;

  // Throws ValidationError unless every extent is a positive whole multiple of its division.
  GridSpec(double dx, double dy, double dz, double x_max, double y_max, double z_max)
      : dx_(dx), dy_(dy), dz_(dz), x_max_(x_max), y_max_(y_max), z_max_(z_max) {
    if (!(dx > 0.0 && dy > 0.0 && dz > 0.0)) throw ValidationError("grid divisions must be positive");
    if (!(x_max > 0.0 && y_max > 0.0 && z_max > 0.0)) throw ValidationError("grid extents must be positive");
    a_ = whole_count(x_max, dx, "x");
    b_ = whole_count(y_max, dy, "y");
    c_ = whole_count(z_max, dz, "z");
  }

  static GridSpec from_counts(int a, int b, int c, double dx, double dy, double dz) {
    return GridSpec(dx, dy, dz, a * dx, b * dy, c * dz);
  }

  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double dz() const { return dz_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double z_max() const { return z_max_; }
  int a() const { return a_; }
  int b() const { return b_; }
  int c() const { return c_; }
  double division(int axis) const { return axis == 0 ? dx_ : (axis == 1 ? dy_ : dz_); }
  int count(int axis) const { return axis == 0 ? a_ : (axis == 1 ? b_ : c_); }

  std::size_t cell_count() const { return static_cast<std::size_t>(a_) * b_ * c_; }
  std::size_t column_count() const { return static_cast<std::size_t>(a_) * b_; }

  bool valid(const CellIndex& c) const {
    return c.i >= 1 && c.i <= a_ && c.j >= 1 && c.j <= b_ && c.k >= 1 && c.k <= c_;
  }

  void require_valid(const CellIndex& c) const {
    if (!valid(c)) {
      throw InvalidIndexError("cell " + to_string(c) + " outside grid " + std::to_string(a_) + "x" +
                              std::to_string(b_) + "x" + std::to_string(c_));
    }
  }

  std::size_t linear(const CellIndex& c) const {
    return (static_cast<std::size_t>(c.k - 1) * a_ + (c.i - 1)) * b_ + (c.j - 1);
  }

  CellIndex from_linear(std::size_t n) const {
    const auto j = static_cast<int>(n % b_);
    n /= b_;
    const auto i = static_cast<int>(n % a_);
    const auto k = static_cast<int>(n / a_);
    return {i + 1, j + 1, k + 1};
  }

  std::size_t column(int i, int j) const { return static_cast<std::size_t>(i - 1) * b_ + (j - 1); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  static int whole_count(double extent, double div, const char* axis) {
    const double ratio = extent / div;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      throw ValidationError(std::string("extent along ") + axis + " is not a whole multiple of its division");
    }
    return static_cast<int>(rounded);
  }

  double dx_ = 1.0, dy_ = 1.0, dz_ = 1.0;
  double x_max_ = 1.0, y_max_ = 1.0, z_max_ = 1.0;
  int a_ = 1, b_ = 1, c_ = 1;
};

inline Point3 cell_center(const CellIndex& idx, const GridSpec& grid) {
  grid.require_valid(idx);
  return {(idx.i - 0.5) * grid.dx(), (idx.j - 0.5) * grid.dy(), (idx.k - 0.5) * grid.dz()};
}

// Lower and upper corners of a cell.
inline std::pair<Point3, Point3> cell_bounds(const CellIndex& idx, const GridSpec& grid) {
  return {{(idx.i - 1) * grid.dx(), (idx.j - 1) * grid.dy(), (idx.k - 1) * grid.dz()},
          {idx.i * grid.dx(), idx.j * grid.dy(), idx.k * grid.dz()}};
}

namespace detail {
inline int axis_index(double coord, double div, int count) {
  const int n = static_cast<int>(std::floor(coord / div)) + 1;
  return std::min(n, count);  // the outer extent belongs to the last cell
}
}  // namespace detail

// Points on an interior cell boundary belong to the higher-index cell.
inline CellIndex point_to_cell(const Point3& p, const GridSpec& grid) {
  if (!(p.x >= 0.0 && p.x <= grid.x_max() && p.y >= 0.0 && p.y <= grid.y_max() && p.z >= 0.0 &&
        p.z <= grid.z_max())) {
    std::ostringstream os;
    os << "point (" << p.x << "," << p.y << "," << p.z << ") outside grid extents";
    throw OutOfBoundsError(os.str());
  }
  return {detail::axis_index(p.x, grid.dx(), grid.a()), detail::axis_index(p.y, grid.dy(), grid.b()),
          detail::axis_index(p.z, grid.dz(), grid.c())};
}

// 26-connected neighbourhood clipped to the grid.
inline std::vector<CellIndex> neighbors(const CellIndex& idx, const GridSpec& grid) {
  std::vector<CellIndex> out;
  out.reserve(26);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const CellIndex n{idx.i + di, idx.j + dj, idx.k + dk};
        if (grid.valid(n)) out.push_back(n);
      }
  return out;
}

struct RoadInfo {
  double traffic_density = 0.0;  // vehicles per metre
  double width = 3.5;            // m
  double length_per_cell = 0.0;  // m of road inside the column
};

// Static environment over a grid. Per-column rasters are indexed by GridSpec::column.
struct UrbanScene {
  GridSpec grid;
  std::vector<double> building_height;     // m
  std::vector<double> population_density;  // persons / m^2
  std::vector<std::optional<RoadInfo>> road;
  double uav_density = 0.0;                // UAVs / m^3
  std::vector<std::uint8_t> no_fly;        // per cell

  static UrbanScene empty(const GridSpec& grid) {
    UrbanScene s;
    s.grid = grid;
    s.building_height.assign(grid.column_count(), 0.0);
    s.population_density.assign(grid.column_count(), 0.0);
    s.road.assign(grid.column_count(), std::nullopt);
    s.no_fly.assign(grid.cell_count(), 0);
    return s;
  }

  double height(int i, int j) const { return building_height[grid.column(i, j)]; }

  bool is_obstacle(const CellIndex& c) const {
    return (c.k - 0.5) * grid.dz() <= height(c.i, c.j);
  }
  bool is_no_fly(const CellIndex& c) const { return no_fly[grid.linear(c)] != 0; }

  std::size_t obstacle_count() const {
    std::size_t n = 0;
    for (int k = 1; k <= grid.c(); ++k)
      for (int i = 1; i <= grid.a(); ++i)
        for (int j = 1; j <= grid.b(); ++j) n += is_obstacle({i, j, k}) ? 1 : 0;
    return n;
  }

  void validate() const {
    const auto cols = grid.column_count();
    if (building_height.size() != cols || population_density.size() != cols || road.size() != cols ||
        no_fly.size() != grid.cell_count()) {
      throw ValidationError("scene rasters do not match grid dimensions");
    }
    for (std::size_t n = 0; n < cols; ++n) {
      if (!(building_height[n] >= 0.0)) throw ValidationError("building height must be >= 0");
      if (!(population_density[n] >= 0.0)) throw ValidationError("population density must be >= 0");
      if (road[n]) {
        if (!(road[n]->traffic_density >= 0.0) || !(road[n]->length_per_cell >= 0.0))
          throw ValidationError("road densities must be >= 0");
        if (!(road[n]->width > 0.0)) throw ValidationError("road width must be > 0");
      }
    }
    if (!(uav_density >= 0.0)) throw ValidationError("UAV density must be >= 0");
  }
};

// Inclusive 1-based index range.
struct IndexRange {
  int lo = 1;
  int hi = 1;
};

struct PopulationZone {
  IndexRange i, j;
  double density = 0.0;
};

struct RoadZone {
  IndexRange i, j;
  RoadInfo info;
};

struct NoFlyBox {
  IndexRange i, j, k;
};

// Scene parameters that accompany a height raster.
struct SceneConfig {
  double dz = 30.0;
  double z_max = 300.0;
  double population_density = 0.0;
  double uav_density = 0.0;
  std::vector<PopulationZone> population_zones;
  std::vector<RoadZone> roads;
  std::vector<NoFlyBox> no_fly;
};

namespace detail {
inline IndexRange range_from_json(const nlohmann::json& j, const char* key) {
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw ConfigError(std::string("range '") + key + "' must be [lo, hi]");
  return {r[0].get<int>(), r[1].get<int>()};
}

inline void check_range(const IndexRange& r, int count, const char* axis) {
  if (r.lo < 1 || r.hi > count || r.lo > r.hi) {
    throw ConfigError(std::string("index range along ") + axis + " [" + std::to_string(r.lo) + "," +
                      std::to_string(r.hi) + "] outside 1.." + std::to_string(count));
  }
}
}  // namespace detail

inline SceneConfig scene_config_from_json(const nlohmann::json& j) {
  SceneConfig cfg;
  try {
    cfg.dz = j.value("dz", cfg.dz);
    cfg.z_max = j.value("z_max", cfg.z_max);
    cfg.population_density = j.value("population_density", 0.0);
    cfg.uav_density = j.value("uav_density", 0.0);
    for (const auto& z : j.value("population_zones", nlohmann::json::array())) {
      cfg.population_zones.push_back(
          {detail::range_from_json(z, "i"), detail::range_from_json(z, "j"), z.at("density").get<double>()});
    }
    for (const auto& r : j.value("roads", nlohmann::json::array())) {
      RoadZone rz{detail::range_from_json(r, "i"), detail::range_from_json(r, "j"), {}};
      rz.info.traffic_density = r.at("traffic_density").get<double>();
      rz.info.width = r.at("width").get<double>();
      rz.info.length_per_cell = r.value("length_per_cell", -1.0);
      cfg.roads.push_back(rz);
    }
    for (const auto& b : j.value("no_fly", nlohmann::json::array())) {
      cfg.no_fly.push_back({detail::range_from_json(b, "i"), detail::range_from_json(b, "j"),
                            detail::range_from_json(b, "k")});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
  if (cfg.population_density < 0.0 || cfg.uav_density < 0.0) throw ConfigError("densities must be >= 0");
  return cfg;
}

inline nlohmann::json to_json(const SceneConfig& cfg) {
  using nlohmann::json;
  json j;
  j["dz"] = cfg.dz;
  j["z_max"] = cfg.z_max;
  j["population_density"] = cfg.population_density;
  j["uav_density"] = cfg.uav_density;
  j["population_zones"] = json::array();
  for (const auto& z : cfg.population_zones)
    j["population_zones"].push_back({{"i", {z.i.lo, z.i.hi}}, {"j", {z.j.lo, z.j.hi}}, {"density", z.density}});
  j["roads"] = json::array();
  for (const auto& r : cfg.roads)
    j["roads"].push_back({{"i", {r.i.lo, r.i.hi}},
                          {"j", {r.j.lo, r.j.hi}},
                          {"traffic_density", r.info.traffic_density},
                          {"width", r.info.width},
                          {"length_per_cell", r.info.length_per_cell}});
  j["no_fly"] = json::array();
  for (const auto& b : cfg.no_fly)
    j["no_fly"].push_back({{"i", {b.i.lo, b.i.hi}}, {"j", {b.j.lo, b.j.hi}}, {"k", {b.k.lo, b.k.hi}}});
  return j;
}

struct HeightRaster {
  int a = 0;
  int b = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> heights;  // row-major, a rows x b columns
};

// Text raster: header "a b dx dy" followed by a rows of b whitespace-separated heights.
inline HeightRaster parse_raster(std::istream& in, const std::string& source = "raster") {
  HeightRaster r;
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw IngestionError(source + ": missing header");
  {
    std::istringstream hs(line);
    if (!(hs >> r.a >> r.b >> r.dx >> r.dy)) throw IngestionError(source + ": malformed header, expected 'a b dx dy'");
    std::string extra;
    if (hs >> extra) throw IngestionError(source + ": trailing token in header");
    if (r.a <= 0 || r.b <= 0 || !(r.dx > 0.0) || !(r.dy > 0.0))
      throw IngestionError(source + ": header values must be positive");
  }
  r.heights.reserve(static_cast<std::size_t>(r.a) * r.b);
  for (int row = 1; row <= r.a; ++row) {
    if (!next_line()) {
      throw IngestionError(source + ": expected " + std::to_string(r.a) + " rows, found " + std::to_string(row - 1));
    }
    std::istringstream ls(line);
    std::string tok;
    int col = 0;
    while (ls >> tok) {
      ++col;
      if (col > r.b) {
        throw IngestionError(source + ": row " + std::to_string(row) + " has more than " + std::to_string(r.b) +
                             " columns (line " + std::to_string(line_no) + ")");
      }
      try {
        std::size_t used = 0;
        const double h = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(h) || h < 0.0) throw std::invalid_argument("bad");
        r.heights.push_back(h);
      } catch (const std::exception&) {
        throw IngestionError(source + ": invalid height '" + tok + "' at row " + std::to_string(row) + ", column " +
                             std::to_string(col));
      }
    }
    if (col != r.b) {
      throw IngestionError(source + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                           " columns, expected " + std::to_string(r.b));
    }
  }
  if (next_line()) throw IngestionError(source + ": more than " + std::to_string(r.a) + " rows");
  return r;
}

inline void write_raster(std::ostream& out, const HeightRaster& r) {
  out << r.a << ' ' << r.b << ' ' << r.dx << ' ' << r.dy << '\n';
  for (int i = 0; i < r.a; ++i) {
    for (int j = 0; j < r.b; ++j) {
      if (j) out << ' ';
      out << r.heights[static_cast<std::size_t>(i) * r.b + j];
    }
    out << '\n';
  }
}

inline UrbanScene build_scene(const HeightRaster& raster, const SceneConfig& cfg) {
  GridSpec grid;
  try {
    grid = GridSpec(raster.dx, raster.dy, cfg.dz, raster.a * raster.dx, raster.b * raster.dy, cfg.z_max);
  } catch (const ValidationError& e) {
    throw IngestionError(std::string("scene grid: ") + e.what());
  }
  UrbanScene s = UrbanScene::empty(grid);
  s.building_height = raster.heights;
  std::fill(s.population_density.begin(), s.population_density.end(), cfg.population_density);
  s.uav_density = cfg.uav_density;
  for (const auto& z : cfg.population_zones) {
    detail::check_range(z.i, grid.a(), "i");
    detail::check_range(z.j, grid.b(), "j");
    if (z.density < 0.0) throw ConfigError("population zone density must be >= 0");
    for (int i = z.i.lo; i <= z.i.hi; ++i)
      for (int j = z.j.lo; j <= z.j.hi; ++j) s.population_density[grid.column(i, j)] = z.density;
  }
  for (const auto& r : cfg.roads) {
    detail::check_range(r.i, grid.a(), "i");
    detail::check_range(r.j, grid.b(), "j");
    RoadInfo info = r.info;
    if (info.length_per_cell < 0.0) info.length_per_cell = std::min(grid.dx(), grid.dy());
    for (int i = r.i.lo; i <= r.i.hi; ++i)
      for (int j = r.j.lo; j <= r.j.hi; ++j) s.road[grid.column(i, j)] = info;
  }
  for (const auto& b : cfg.no_fly) {
    detail::check_range(b.i, grid.a(), "i");
    detail::check_range(b.j, grid.b(), "j");
    detail::check_range(b.k, grid.c(), "k");
    for (int k = b.k.lo; k <= b.k.hi; ++k)
      for (int i = b.i.lo; i <= b.i.hi; ++i)
        for (int j = b.j.lo; j <= b.j.hi; ++j) s.no_fly[grid.linear({i, j, k})] = 1;
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw IngestionError(e.what());
  }
  return s;
}

// Reads the raster file and applies the scene configuration. When `expected` is given the
// raster must describe exactly that grid.
inline UrbanScene load_scene(const std::string& raster_path, const SceneConfig& cfg,
                             const std::optional<GridSpec>& expected = std::nullopt) {
  std::ifstream in(raster_path);
  if (!in) throw IngestionError("cannot open raster file '" + raster_path + "'");
  const HeightRaster raster = parse_raster(in, raster_path);
  if (expected) {
    if (raster.a != expected->a() || raster.b != expected->b() || raster.dx != expected->dx() ||
        raster.dy != expected->dy()) {
      throw IngestionError(raster_path + ": raster is " + std::to_string(raster.a) + "x" + std::to_string(raster.b) +
                           " columns but grid expects " + std::to_string(expected->a()) + "x" +
                           std::to_string(expected->b()));
    }
  }
  UrbanScene s = build_scene(raster, cfg);
  if (expected && !(s.grid == *expected)) throw IngestionError(raster_path + ": vertical extent does not match grid");
  return s;
}

// Re-grids a scene. Each new column takes the tallest overlapping source building, the
// area-weighted population density and the strongest overlapping road; a new cell is
// no-fly when it overlaps any no-fly source cell.
inline UrbanScene resample_scene(const UrbanScene& src, double dx, double dy, double dz) {
  const GridSpec& g0 = src.grid;
  const GridSpec grid(dx, dy, dz, g0.x_max(), g0.y_max(), g0.z_max());
  UrbanScene s = UrbanScene::empty(grid);
  s.uav_density = src.uav_density;

  auto overlap_range = [](double lo, double hi, double div, int count) {
    const double eps = 1e-9 * div;
    int first = static_cast<int>(std::floor((lo + eps) / div)) + 1;
    int last = static_cast<int>(std::ceil((hi - eps) / div));
    return std::pair<int, int>{std::max(first, 1), std::min(last, count)};
  };

  for (int i = 1; i <= grid.a(); ++i) {
    const double x0 = (i - 1) * dx, x1 = i * dx;
    const auto [si0, si1] = overlap_range(x0, x1, g0.dx(), g0.a());
    for (int j = 1; j <= grid.b(); ++j) {
      const double y0 = (j - 1) * dy, y1 = j * dy;
      const auto [sj0, sj1] = overlap_range(y0, y1, g0.dy(), g0.b());
      double hmax = 0.0, pop = 0.0, area = 0.0;
      std::optional<RoadInfo> best_road;
      for (int si = si0; si <= si1; ++si) {
        const double ox = std::min(x1, si * g0.dx()) - std::max(x0, (si - 1) * g0.dx());
        for (int sj = sj0; sj <= sj1; ++sj) {
          const double oy = std::min(y1, sj * g0.dy()) - std::max(y0, (sj - 1) * g0.dy());
          const double w = std::max(0.0, ox) * std::max(0.0, oy);
          hmax = std::max(hmax, src.height(si, sj));
          pop += w * src.population_density[g0.column(si, sj)];
          area += w;
          const auto& r = src.road[g0.column(si, sj)];
          if (r && (!best_road || r->traffic_density * r->traffic_density / r->width >
                                      best_road->traffic_density * best_road->traffic_density / best_road->width)) {
            best_road = r;
          }
        }
      }
      const auto col = grid.column(i, j);
      s.building_height[col] = hmax;
      s.population_density[col] = area > 0.0 ? pop / area : 0.0;
      if (best_road) {
        best_road->length_per_cell *= std::min(dx, dy) / std::min(g0.dx(), g0.dy());
        s.road[col] = best_road;
      }
    }
  }
  for (int k = 1; k <= grid.c(); ++k) {
    const auto [sk0, sk1] = overlap_range((k - 1) * dz, k * dz, g0.dz(), g0.c());
    for (int i = 1; i <= grid.a(); ++i) {
      const auto [si0, si1] = overlap_range((i - 1) * dx, i * dx, g0.dx(), g0.a());
      for (int j = 1; j <= grid.b(); ++j) {
        const auto [sj0, sj1] = overlap_range((j - 1) * dy, j * dy, g0.dy(), g0.b());
        bool nf = false;
        for (int sk = sk0; sk <= sk1 && !nf; ++sk)
          for (int si = si0; si <= si1 && !nf; ++si)
            for (int sj = sj0; sj <= sj1 && !nf; ++sj) nf = src.is_no_fly({si, sj, sk});
        s.no_fly[grid.linear({i, j, k})] = nf ? 1 : 0;
      }
    }
  }
  return s;
}

}  // namespace uam
