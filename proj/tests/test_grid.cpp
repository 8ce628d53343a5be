#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "uam/demo.hpp"

using namespace uam;

TEST(Grid, CellCenters) {
  const GridSpec g(1, 1, 1, 10, 10, 10);
  const Point3 c = cell_center({2, 3, 4}, g);
  EXPECT_DOUBLE_EQ(c.x, 1.5);
  EXPECT_DOUBLE_EQ(c.y, 2.5);
  EXPECT_DOUBLE_EQ(c.z, 3.5);

  const GridSpec h(50, 50, 50, 500, 500, 500);
  const Point3 first = cell_center({1, 1, 1}, h);
  EXPECT_DOUBLE_EQ(first.x, 25);
  EXPECT_DOUBLE_EQ(first.y, 25);
  EXPECT_DOUBLE_EQ(first.z, 25);
  const Point3 last = cell_center({h.a(), h.b(), h.c()}, h);
  EXPECT_DOUBLE_EQ(last.x, 475);
  EXPECT_DOUBLE_EQ(last.y, 475);
  EXPECT_DOUBLE_EQ(last.z, 475);
}

TEST(Grid, RejectsBadIndices) {
  const GridSpec g(50, 50, 30, 500, 500, 300);
  EXPECT_THROW(cell_center({0, 1, 1}, g), InvalidIndexError);
  EXPECT_THROW(cell_center({1, 11, 1}, g), InvalidIndexError);
  EXPECT_THROW(point_to_cell({-1, 5, 5}, g), OutOfBoundsError);
  EXPECT_THROW(point_to_cell({5, 5, 301}, g), OutOfBoundsError);
  EXPECT_THROW(GridSpec(50, 50, 30, 510, 500, 300), ValidationError);
  EXPECT_THROW(GridSpec(0, 50, 30, 500, 500, 300), ValidationError);
}

TEST(Grid, PointToCellBoundaries) {
  const GridSpec g(50, 50, 30, 500, 500, 300);
  EXPECT_EQ(point_to_cell({25, 25, 25}, GridSpec(50, 50, 50, 500, 500, 500)), (CellIndex{1, 1, 1}));
  EXPECT_EQ(point_to_cell({50, 50, 30}, g), (CellIndex{2, 2, 2}));
  EXPECT_EQ(point_to_cell({0, 0, 0}, g), (CellIndex{1, 1, 1}));
  EXPECT_EQ(point_to_cell({500, 500, 300}, g), (CellIndex{10, 10, 10}));
}

TEST(Grid, PointToCellRoundTripProperty) {
  const GridSpec g(50, 40, 30, 1000, 800, 330);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0, g.x_max()), uy(0, g.y_max()), uz(0, g.z_max());
  for (int n = 0; n < 1000; ++n) {
    const Point3 p{ux(rng), uy(rng), uz(rng)};
    const Point3 c = cell_center(point_to_cell(p, g), g);
    EXPECT_LE(std::abs(c.x - p.x), g.dx() / 2 + 1e-9);
    EXPECT_LE(std::abs(c.y - p.y), g.dy() / 2 + 1e-9);
    EXPECT_LE(std::abs(c.z - p.z), g.dz() / 2 + 1e-9);
  }
}

TEST(Grid, NeighbourCounts) {
  const GridSpec g(1, 1, 1, 5, 5, 5);
  EXPECT_EQ(neighbors({3, 3, 3}, g).size(), 26u);
  EXPECT_EQ(neighbors({1, 1, 1}, g).size(), 7u);
  EXPECT_EQ(neighbors({3, 3, 1}, g).size(), 17u);
  EXPECT_EQ(neighbors({1, 3, 1}, g).size(), 11u);
}

TEST(Grid, NeighboursAreDistinctAndAdjacent) {
  const GridSpec g(1, 1, 1, 4, 3, 2);
  for (std::size_t n = 0; n < g.cell_count(); ++n) {
    const CellIndex c = g.from_linear(n);
    const auto nb = neighbors(c, g);
    std::set<std::size_t> seen;
    for (const auto& o : nb) {
      EXPECT_TRUE(g.valid(o));
      EXPECT_LE(std::max({std::abs(o.i - c.i), std::abs(o.j - c.j), std::abs(o.k - c.k)}), 1);
      EXPECT_FALSE(o == c);
      seen.insert(g.linear(o));
    }
    EXPECT_EQ(seen.size(), nb.size());
  }
}

TEST(Grid, LinearIndexRoundTrip) {
  const GridSpec g(10, 20, 30, 50, 100, 90);
  for (std::size_t n = 0; n < g.cell_count(); ++n) EXPECT_EQ(g.linear(g.from_linear(n)), n);
}

namespace {
HeightRaster flat_raster(int a, int b, double d) {
  return HeightRaster{a, b, d, d, std::vector<double>(static_cast<std::size_t>(a) * b, 0.0)};
}
SceneConfig plain_config(double dz, double z_max) {
  SceneConfig c;
  c.dz = dz;
  c.z_max = z_max;
  return c;
}
}  // namespace

TEST(Scene, FlatRasterHasNoObstacles) {
  const UrbanScene s = build_scene(flat_raster(6, 5, 50), plain_config(30, 300));
  EXPECT_EQ(s.obstacle_count(), 0u);
}

TEST(Scene, ColumnObstacleUsesCellCentres) {
  HeightRaster r = flat_raster(6, 5, 50);
  r.heights[static_cast<std::size_t>(2 - 1) * 5 + (3 - 1)] = 100.0;
  const UrbanScene s = build_scene(r, plain_config(30, 300));
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(s.is_obstacle({2, 3, k})) << k;
  EXPECT_FALSE(s.is_obstacle({2, 3, 4}));
  EXPECT_FALSE(s.is_obstacle({3, 3, 1}));
  EXPECT_EQ(s.obstacle_count(), 3u);
}

TEST(Scene, RasterParsingAndMismatch) {
  std::istringstream in("# comment\n2 3 50 50\n0 10 20\n30 40 50\n");
  const HeightRaster r = parse_raster(in);
  EXPECT_EQ(r.a, 2);
  EXPECT_EQ(r.b, 3);
  EXPECT_DOUBLE_EQ(r.heights[5], 50);

  std::istringstream short_in("2 3 50 50\n0 10 20\n30 40\n");
  EXPECT_THROW(parse_raster(short_in), IngestionError);
  std::istringstream bad_in("2 3 50 50\n0 10 x\n30 40 50\n");
  EXPECT_THROW(parse_raster(bad_in), IngestionError);

  const auto dir = fixture::temp_dir("raster");
  {
    std::ofstream out(dir / "r.raster");
    write_raster(out, r);
  }
  EXPECT_NO_THROW(load_scene((dir / "r.raster").string(), plain_config(30, 300), GridSpec(50, 50, 30, 100, 150, 300)));
  EXPECT_THROW(load_scene((dir / "r.raster").string(), plain_config(30, 300), GridSpec(50, 50, 30, 150, 150, 300)),
               IngestionError);
  EXPECT_THROW(load_scene((dir / "missing.raster").string(), plain_config(30, 300)), IngestionError);
}

TEST(Scene, ZonesRoadsAndNoFly) {
  SceneConfig c = plain_config(30, 300);
  c.population_density = 1e-4;
  c.population_zones = {{{2, 3}, {1, 2}, 5e-4}};
  c.roads = {{{1, 1}, {1, 5}, RoadInfo{0.07, 3.5, -1}}};
  c.no_fly = {{{4, 4}, {4, 4}, {1, 2}}};
  const UrbanScene s = build_scene(flat_raster(6, 5, 50), c);
  EXPECT_DOUBLE_EQ(s.population_density[s.grid.column(2, 2)], 5e-4);
  EXPECT_DOUBLE_EQ(s.population_density[s.grid.column(5, 5)], 1e-4);
  ASSERT_TRUE(s.road[s.grid.column(1, 3)].has_value());
  EXPECT_DOUBLE_EQ(s.road[s.grid.column(1, 3)]->length_per_cell, 50);
  EXPECT_FALSE(s.road[s.grid.column(2, 3)].has_value());
  EXPECT_TRUE(s.is_no_fly({4, 4, 2}));
  EXPECT_FALSE(s.is_no_fly({4, 4, 3}));

  SceneConfig bad = c;
  bad.no_fly = {{{4, 9}, {4, 4}, {1, 2}}};
  EXPECT_THROW(build_scene(flat_raster(6, 5, 50), bad), ConfigError);
}

TEST(Scene, ConfigJsonRoundTrip) {
  const SceneConfig c = demo::scene_config();
  const SceneConfig back = scene_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Scene, ResampleKeepsTallestBuildingAndNoFly) {
  const UrbanScene s = demo::scene();
  const UrbanScene fine = resample_scene(s, 25, 25, 15);
  EXPECT_EQ(fine.grid.a(), 2 * s.grid.a());
  EXPECT_EQ(fine.grid.c(), 2 * s.grid.c());
  for (int i = 1; i <= s.grid.a(); i += 7)
    for (int j = 1; j <= s.grid.b(); j += 5) {
      EXPECT_DOUBLE_EQ(fine.height(2 * i, 2 * j), s.height(i, j));
      EXPECT_DOUBLE_EQ(fine.population_density[fine.grid.column(2 * i - 1, 2 * j)], s.population_density[s.grid.column(i, j)]);
    }
  EXPECT_TRUE(fine.is_no_fly({2 * 40, 2 * 22, 3}));
  const UrbanScene coarse = resample_scene(s, 100, 100, 30);
  EXPECT_DOUBLE_EQ(coarse.height(1, 1), std::max({s.height(1, 1), s.height(1, 2), s.height(2, 1), s.height(2, 2)}));
}
