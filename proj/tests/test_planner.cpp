#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "uam/demo.hpp"

using namespace uam;

namespace {

double close_tol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

double max_turn(const std::vector<Point3>& pts) {
  double worst = 0.0;
  for (std::size_t n = 1; n + 1 < pts.size(); ++n) {
    const Point3 u = pts[n] - pts[n - 1], v = pts[n + 1] - pts[n];
    if (norm(u) < 1e-12 || norm(v) < 1e-12) continue;
    worst = std::max(worst, std::acos(std::clamp(dot(u, v) / (norm(u) * norm(v)), -1.0, 1.0)));
  }
  return worst;
}

// 3D octile distance in cells for equal cell sizes.
double octile(int di, int dj, int dk, double cell) {
  std::array<int, 3> d{std::abs(di), std::abs(dj), std::abs(dk)};
  std::sort(d.rbegin(), d.rend());
  return cell * (d[2] * std::sqrt(3.0) + (d[1] - d[2]) * std::sqrt(2.0) + (d[0] - d[1]));
}

}  // namespace

TEST(Buffer, SizeFromClearance) {
  const GridSpec g(50, 50, 30, 500, 500, 300);
  const BufferSize b = buffer_size(50, g);
  EXPECT_EQ(b.x, 3);
  EXPECT_EQ(b.y, 3);
  EXPECT_EQ(b.z, 5);
  EXPECT_EQ(buffer_size(0, g).x, 1);
  EXPECT_EQ(buffer_size(0, g).z, 1);
  EXPECT_THROW(buffer_size(-1, g), DomainError);
}

TEST(Buffer, ShellCounts) {
  RiskMap m = RiskMap::uniform(GridSpec(1, 1, 1, 7, 7, 7));
  const CellIndex c{4, 4, 4};
  const BufferSize n3{3, 3, 3};
  EXPECT_EQ(buffer_penalty(c, m, n3), 0);
  m.set_blocked({5, 4, 4});
  EXPECT_EQ(buffer_penalty(c, m, n3), 1);
  for (const auto& o : neighbors(c, m.grid)) m.set_blocked(o);
  EXPECT_EQ(buffer_penalty(c, m, n3), 26);
  EXPECT_EQ(buffer_penalty(c, m, BufferSize{1, 1, 1}), 0);
}

TEST(Buffer, ShellMatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const RiskMap m = fixture::random_map(rng, 9, 8, 7, 0.3);
    for (const BufferSize b : {BufferSize{3, 3, 3}, BufferSize{3, 5, 3}, BufferSize{5, 3, 5}, BufferSize{1, 3, 5}}) {
      for (std::size_t n = 0; n < m.grid.cell_count(); n += 13) {
        const CellIndex c = m.grid.from_linear(n);
        EXPECT_EQ(buffer_penalty(c, m, b), oracle::shell_count(m, c, b.x / 2, b.y / 2, b.z / 2));
      }
    }
  }
}

TEST(Costs, SegmentRisk) {
  EXPECT_DOUBLE_EQ(segment_risk_cost({0, 0, 0}, {50, 0, 0}, 0, 0), 0);
  EXPECT_DOUBLE_EQ(segment_risk_cost({0, 0, 0}, {50, 0, 0}, 1, 1), 50);
}

TEST(Costs, LoadFactorAndTransport) {
  const AircraftPerformance p;
  EXPECT_DOUBLE_EQ(load_factor(p, 0), 1.0);
  EXPECT_NEAR(load_factor(p, 220), 2.56, 1e-12);
  EXPECT_THROW(load_factor(p, 221), OverloadError);
  EXPECT_THROW(load_factor(p, -1), DomainError);
  EXPECT_NEAR(segment_transport_cost({0, 0, 100}, {0, 0, 130}, p, 0), 30 * 4.65e5 * 5.96e-7, 1e-12);
  EXPECT_NEAR(segment_transport_cost({0, 0, 100}, {0, 0, 130}, p, 0), 8.31, 0.01);
}

TEST(Costs, WeightedTotals) {
  AircraftPerformance p = fixture::open_aircraft();
  p.energy_horizontal = 30.0 / (100.0 * p.energy_cost);
  RiskMap open = RiskMap::uniform(GridSpec(10, 10, 10, 200, 100, 100));
  TrackQuery q = fixture::open_query({1, 1, 1}, {10, 1, 1});
  const std::vector<Point3> line{{5, 5, 5}, {105, 5, 5}};
  const TrackCost zero = track_cost(line, open, p, q);
  EXPECT_DOUBLE_EQ(zero.risk, 0);
  EXPECT_NEAR(zero.total, q.w_transport * zero.transport, 1e-12);

  RiskMap risky = RiskMap::uniform(GridSpec(10, 10, 10, 200, 100, 100), 1e-7, 1e-6);
  q.risk_unit = 1e-7;
  q.w_risk = q.w_transport = 0.5;
  const TrackCost c = track_cost(line, risky, p, q);
  EXPECT_NEAR(c.risk, 100, 1e-9);
  EXPECT_NEAR(c.transport, 30, 1e-9);
  EXPECT_NEAR(c.total, 65, 1e-9);
}

TEST(Costs, TrackCostMatchesResummation) {
  std::mt19937_64 rng(5);
  const AircraftPerformance p = fixture::open_aircraft();
  for (int t = 0; t < 30; ++t) {
    const RiskMap m = fixture::random_map(rng, 8, 8, 4, 0.0);
    TrackQuery q = fixture::open_query({1, 1, 1}, {1, 1, 1});
    q.payload = 50;
    std::uniform_real_distribution<double> ux(0, 80), uz(0, 40);
    std::vector<Point3> pts;
    for (int n = 0; n < 6; ++n) pts.push_back({ux(rng), ux(rng), uz(rng)});
    double risk = 0, transport = 0;
    const double tau = 1 + 50.0 / 220.0 * 1.56;
    for (std::size_t n = 1; n < pts.size(); ++n) {
      const double r0 = m.at(point_to_cell(pts[n - 1], m.grid)) / 1e-7, r1 = m.at(point_to_cell(pts[n], m.grid)) / 1e-7;
      const double h = std::hypot(pts[n].x - pts[n - 1].x, pts[n].y - pts[n - 1].y), v = std::abs(pts[n].z - pts[n - 1].z);
      risk += (r0 + r1) / 2 * std::sqrt(h * h + v * v);
      transport += (p.energy_horizontal * h + p.energy_vertical * v) * p.energy_cost * tau;
    }
    const TrackCost c = track_cost(pts, m, p, q);
    EXPECT_NEAR(c.risk, risk, close_tol(risk));
    EXPECT_NEAR(c.transport, transport, close_tol(transport));
  }
}

TEST(Planner, MatchesDijkstraOnRandomGrids) {
  std::mt19937_64 rng(2024);
  const AircraftPerformance p = fixture::open_aircraft();
  int solved = 0;
  for (int t = 0; t < 25; ++t) {
    const RiskMap m = fixture::random_map(rng, 12, 12, 4, 0.2);
    TrackQuery q = fixture::open_query(fixture::random_free_cell(rng, m), fixture::random_free_cell(rng, m));
    q.w_risk = std::uniform_real_distribution<double>(0, 1)(rng);
    q.w_transport = 1 - q.w_risk;
    q.clearance = t % 2 ? 10.0 : 0.0;
    q.penalty = t % 2 ? 100.0 : 0.0;
    const auto ref = oracle::dijkstra(q, m, p);
    if (!std::isfinite(ref.cost)) {
      EXPECT_THROW(plan_initial_track(q, m, p), InfeasibleError);
      continue;
    }
    const PlanResult r = plan_initial_track(q, m, p);
    EXPECT_NEAR(r.objective, ref.cost, close_tol(ref.cost));
    EXPECT_NEAR(oracle::path_objective(r.cells, q, m, p), ref.cost, close_tol(ref.cost));
    ++solved;
  }
  EXPECT_GT(solved, 15);
}

TEST(Planner, HeuristicIsAdmissible) {
  std::mt19937_64 rng(99);
  const AircraftPerformance p = fixture::open_aircraft();
  for (int t = 0; t < 10; ++t) {
    const RiskMap m = fixture::random_map(rng, 8, 8, 3, 0.15);
    TrackQuery q = fixture::open_query({1, 1, 1}, fixture::random_free_cell(rng, m));
    const PlanningGraph graph(q, m, p);
    for (int s = 0; s < 10; ++s) {
      TrackQuery from = q;
      from.origin = fixture::random_free_cell(rng, m);
      const auto ref = oracle::dijkstra(from, m, p);
      if (std::isfinite(ref.cost)) {
        EXPECT_LE(graph.heuristic(from.origin), ref.cost + 1e-12);
      }
    }
  }
}

TEST(Planner, EmptyGridTransportOptimum) {
  const AircraftPerformance p = fixture::open_aircraft();
  const RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 100, 100, 30));
  for (const auto& [o, d] : {std::pair{CellIndex{1, 1, 2}, CellIndex{10, 4, 2}}, std::pair{CellIndex{2, 9, 1}, CellIndex{8, 1, 1}},
                             std::pair{CellIndex{1, 1, 1}, CellIndex{10, 10, 3}}}) {
    TrackQuery q = fixture::open_query(o, d);
    q.w_risk = 0;
    q.w_transport = 1;
    const PlanResult r = plan_initial_track(q, m, p);
    const double horiz = octile(d.i - o.i, d.j - o.j, 0, 10);
    const double expect = (p.energy_horizontal * horiz + p.energy_vertical * 10 * std::abs(d.k - o.k)) * p.energy_cost;
    EXPECT_NEAR(r.track.cost.transport, expect, close_tol(expect));
    if (o.k == d.k) {
      EXPECT_NEAR(r.track.length, octile(d.i - o.i, d.j - o.j, 0, 10), 1e-9);
    }
  }
}

TEST(Planner, DegenerateAndBlockedQueries) {
  const AircraftPerformance p = fixture::open_aircraft();
  RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 100, 100, 100));
  const PlanResult same = plan_initial_track(fixture::open_query({4, 4, 4}, {4, 4, 4}), m, p);
  EXPECT_EQ(same.track.size(), 1u);
  EXPECT_DOUBLE_EQ(same.track.cost.total, 0);

  for (const auto& c : neighbors({8, 8, 8}, m.grid)) m.set_blocked(c);
  EXPECT_THROW(plan_initial_track(fixture::open_query({2, 2, 2}, {8, 8, 8}), m, p), InfeasibleError);
  m.set_blocked({2, 2, 2});
  EXPECT_THROW(plan_initial_track(fixture::open_query({2, 2, 2}, {5, 5, 5}), m, p), ValidationError);

  TrackQuery windy = fixture::open_query({3, 3, 3}, {5, 5, 5});
  windy.wind = 30;
  EXPECT_THROW(plan_initial_track(windy, m, p), ConstraintError);
  TrackQuery high = fixture::open_query({3, 3, 3}, {5, 5, 5});
  high.airspace_min = 60;
  EXPECT_THROW(plan_initial_track(high, m, p), ConstraintError);
  AircraftPerformance short_range = p;
  short_range.max_range = 20;
  EXPECT_THROW(plan_initial_track(fixture::open_query({3, 3, 3}, {9, 3, 3}), m, short_range), RangeError);
}

TEST(Planner, PrunesOutsideAltitudeWindow) {
  const AircraftPerformance p = fixture::open_aircraft();
  RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 100, 100, 100));
  for (int j = 1; j <= 10; ++j)
    for (int k = 1; k <= 5; ++k) m.set_blocked({5, j, k});
  TrackQuery q = fixture::open_query({2, 5, 2}, {8, 5, 2});
  q.airspace_max = 50;
  EXPECT_THROW(plan_initial_track(q, m, p), InfeasibleError);
  q.airspace_max = 100;
  const PlanResult r = plan_initial_track(q, m, p);
  EXPECT_GT(r.track.cost.transport, 0);
  for (const auto& c : r.cells) EXPECT_FALSE(m.is_unsafe(c));
}

TEST(Validation, PlannerOutputPassesAndViolationsAreNamed) {
  const AircraftPerformance perf;
  RiskMap m = RiskMap::uniform(GridSpec(50, 50, 30, 1000, 1000, 330));
  TrackQuery q;
  q.origin = {2, 2, 5};
  q.destination = {18, 15, 6};
  q.payload = 80;
  q.wind = 5;
  const PlanResult r = plan_initial_track(q, m, perf);
  EXPECT_TRUE(validate_track(r.track, q, perf).ok());

  Track low = r.track;
  low.waypoints[1].z = 60;
  EXPECT_TRUE(validate_track(low, q, perf).has("altitude"));
  Track repeat = r.track;
  repeat.waypoints.push_back(repeat.waypoints.front());
  EXPECT_TRUE(validate_track(repeat, q, perf).has("repeat"));
  TrackQuery windy = q;
  windy.wind = 30;
  EXPECT_TRUE(validate_track(r.track, windy, perf).has("wind"));
  TrackQuery heavy = q;
  heavy.payload = 300;
  EXPECT_TRUE(validate_track(r.track, heavy, perf).has("payload"));
  AircraftPerformance short_range = perf;
  short_range.max_range = 100;
  EXPECT_TRUE(validate_track(r.track, q, short_range).has("range"));
}

TEST(Merge, StraightLineCollapsesToTwoWaypoints) {
  const AircraftPerformance p = fixture::open_aircraft();
  const RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 200, 100, 50));
  const TrackQuery q = fixture::open_query({2, 5, 3}, {19, 5, 3});
  const PlanResult r = plan_initial_track(q, m, p);
  ASSERT_GT(r.track.size(), 2u);
  const Track eq = merge_to_equivalent(r.track, m, p, q);
  EXPECT_EQ(eq.size(), 2u);
}

TEST(Merge, LShapedDetourUsesFewerWaypoints) {
  const AircraftPerformance p = fixture::open_aircraft();
  RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 160, 160, 50));
  for (int j = 1; j <= 11; ++j)
    for (int k = 1; k <= 5; ++k) m.set_blocked({8, j, k});
  const TrackQuery q = fixture::open_query({3, 3, 3}, {13, 3, 3});
  const PlanResult r = plan_initial_track(q, m, p);
  const Track eq = merge_to_equivalent(r.track, m, p, q);
  EXPECT_LT(eq.size(), r.track.size());
  EXPECT_LE(eq.length, r.track.length + 1e-9);
  EXPECT_EQ(eq.waypoints.front(), r.track.waypoints.front());
  EXPECT_EQ(eq.waypoints.back(), r.track.waypoints.back());
}

TEST(Merge, NeverLongerOnRandomQueries) {
  std::mt19937_64 rng(17);
  const AircraftPerformance p = fixture::open_aircraft();
  int checked = 0;
  while (checked < 100) {
    const RiskMap m = fixture::random_map(rng, 12, 12, 5, 0.08);
    TrackQuery q = fixture::open_query(fixture::random_free_cell(rng, m), fixture::random_free_cell(rng, m));
    PlanResult r;
    try {
      r = plan_initial_track(q, m, p);
    } catch (const InfeasibleError&) {
      continue;
    }
    const Track eq = merge_to_equivalent(r.track, m, p, q);
    EXPECT_LE(eq.length, r.track.length + 1e-9);
    EXPECT_LE(eq.size(), r.track.size());
    ++checked;
  }
}

TEST(Smooth, TwoWaypointsAndCollinearInputsAreUnchanged) {
  const AircraftPerformance p = fixture::open_aircraft();
  const RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 200, 200, 60));
  const TrackQuery q = fixture::open_query({1, 1, 1}, {1, 1, 1});
  const Track two = make_track(TrackStage::kEquivalent, {{25, 25, 25}, {165, 95, 35}}, m, p, q);
  const Track s2 = smooth_track(two, m, p, q);
  for (const auto& pt : s2.waypoints) {
    const double u = (pt.x - 25) / 140;
    EXPECT_NEAR(pt.y, 25 + 70 * u, 1e-9);
    EXPECT_NEAR(pt.z, 25 + 10 * u, 1e-9);
  }
  EXPECT_NEAR(s2.length, two.length, 1e-9);

  const Track line = make_track(TrackStage::kEquivalent, {{25, 25, 25}, {55, 45, 25}, {85, 65, 25}, {175, 125, 25}}, m, p, q);
  const Track sl = smooth_track(line, m, p, q);
  for (const auto& pt : sl.waypoints) EXPECT_NEAR(pt.y, 25 + (pt.x - 25) * 2.0 / 3.0, 1e-9);
}

TEST(Smooth, RightAngleCornerIsRounded) {
  const AircraftPerformance p = fixture::open_aircraft();
  const RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 300, 300, 60));
  const TrackQuery q = fixture::open_query({1, 1, 1}, {1, 1, 1});
  const Track corner = make_track(TrackStage::kEquivalent, {{55, 55, 25}, {155, 55, 25}, {155, 155, 25}, {155, 255, 25}}, m, p, q);
  SmoothingReport rep;
  const Track s = smooth_track(corner, m, p, q, 0, &rep);
  EXPECT_LT(max_turn(s.waypoints), max_turn(corner.waypoints));
  EXPECT_EQ(rep.fallback_pieces, 0u);
  EXPECT_EQ(rep.unclear_samples, 0u);
}

TEST(Smooth, FallsBackToLinesNearObstacles) {
  const AircraftPerformance p = fixture::open_aircraft();
  RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 300, 300, 60));
  for (int k = 1; k <= 6; ++k) m.set_blocked({17, 7, k});
  const TrackQuery q = fixture::open_query({1, 1, 1}, {1, 1, 1});
  const Track corner = make_track(TrackStage::kEquivalent, {{55, 55, 25}, {145, 55, 25}, {145, 145, 25}, {145, 255, 25}}, m, p, q);
  SmoothingReport rep;
  const Track s = smooth_track(corner, m, p, q, 0, &rep);
  const ClearanceField field(m, altitude_window(q, p));
  for (const auto& pt : s.waypoints) EXPECT_TRUE(field.point_clear(pt));
  EXPECT_EQ(rep.unclear_samples, 0u);
}

TEST(Stages, OpenFieldShortestEqualsOptimal) {
  const AircraftPerformance p = fixture::open_aircraft();
  const RiskMap m = RiskMap::uniform(GridSpec(10, 10, 10, 200, 200, 60));
  TrackQuery q = fixture::open_query({3, 3, 3}, {17, 12, 3});
  q.clearance = 10;
  q.penalty = 100;
  const StagedTracks st = plan_all_stages(q, m, p);
  ASSERT_TRUE(st.shortest.has_value());
  EXPECT_EQ(st.shortest->cells, st.initial.cells);
  EXPECT_DOUBLE_EQ(st.smoothed.cost.risk, 0);
  EXPECT_DOUBLE_EQ(st.shortest->track.cost.risk, 0);
}

TEST(Stages, ParetoOptimaAreNonDominated) {
  std::mt19937_64 rng(31);
  const AircraftPerformance p = fixture::open_aircraft();
  for (int t = 0; t < 10; ++t) {
    const RiskMap m = fixture::random_map(rng, 12, 12, 4, 0.1);
    TrackQuery q = fixture::open_query(fixture::random_free_cell(rng, m), fixture::random_free_cell(rng, m));
    std::vector<std::pair<double, double>> pts;
    try {
      for (int s = 0; s <= 10; ++s) {
        q.w_risk = s / 10.0;
        q.w_transport = 1 - q.w_risk;
        const PlanResult r = plan_initial_track(q, m, p);
        pts.push_back({r.track.cost.risk, r.track.cost.transport});
      }
    } catch (const InfeasibleError&) {
      continue;
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](auto a, auto b) { return std::abs(a.first - b.first) < 1e-9 && std::abs(a.second - b.second) < 1e-9; }),
              pts.end());
    const auto keep = nondominated(pts);
    for (bool k : keep) EXPECT_TRUE(k);
  }
}

TEST(Stages, ShortestVersusInitialDirection) {
  std::mt19937_64 rng(41);
  const AircraftPerformance p = fixture::open_aircraft();
  for (int t = 0; t < 20; ++t) {
    const RiskMap m = fixture::random_map(rng, 12, 12, 4, 0.1);
    TrackQuery q = fixture::open_query(fixture::random_free_cell(rng, m), fixture::random_free_cell(rng, m));
    q.w_risk = q.w_transport = 0.5;
    try {
      const StagedTracks st = plan_all_stages(q, m, p);
      ASSERT_TRUE(st.shortest.has_value());
      EXPECT_LE(st.initial.track.cost.risk, st.shortest->track.cost.risk + 1e-9);
      EXPECT_GE(st.initial.track.cost.transport, st.shortest->track.cost.transport - 1e-9);
      EXPECT_LE(st.equivalent.size(), st.initial.track.size());
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(Stages, DemoSceneDirectionAndSafety) {
  const UrbanScene scene = demo::scene();
  RiskParams rp;
  rp.fall.payload_mass = 220;
  const RiskMap m = build_risk_map(scene, rp);
  const AircraftPerformance perf;
  const auto j = demo::experiment_json();
  const QuerySpec spec = detail::query_from_json(j["queries"][0]);
  const TrackQuery q = spec.on(m.grid);
  const StagedTracks st = plan_all_stages(q, m, perf);
  ASSERT_TRUE(st.shortest.has_value());
  EXPECT_LT(st.smoothed.cost.risk, st.shortest->track.cost.risk);
  EXPECT_GT(st.smoothed.cost.transport, st.shortest->track.cost.transport);
  EXPECT_LE(st.equivalent.size(), st.initial.track.size());
  EXPECT_EQ(st.smoothing.unclear_samples, 0u);
  PlanningGraph graph(q, m, perf);
  for (const auto& c : st.initial.cells) EXPECT_EQ(graph.node_penalty(c), 0.0);
  EXPECT_TRUE(validate_track(st.initial.track, q, perf, &scene).ok());
}
