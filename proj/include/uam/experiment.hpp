#pragma once

// Experiment driver: configuration loading and the risk-map, plan, schedule and sweep
// commands. Every command writes deterministic CSV/SVG files into an output directory.

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"
#include "uam/fleet_scheduler.hpp"
#include "uam/io.hpp"
#include "uam/risk_model.hpp"
#include "uam/soa.hpp"
#include "uam/track_planner.hpp"

namespace uam {

namespace fs = std::filesystem;

struct QuerySpec {
  std::string name;
  Point3 origin;       // m
  Point3 destination;  // m
  TrackQuery query;    // weights, limits, payload; origin/destination filled per grid

  TrackQuery on(const GridSpec& g) const {
    TrackQuery q = query;
    q.origin = point_to_cell(origin, g);
    q.destination = point_to_cell(destination, g);
    return q;
  }
};

struct SweepSpec {
  std::vector<double> altitudes;
  std::vector<std::array<double, 3>> cell_sizes;
  std::vector<int> flights_per_aircraft;
  std::vector<double> speeds;
  std::string pareto_query;
  double pareto_step = 0.1;
  int replicates = 1;  // generator seeds averaged per fleet sweep point
};

struct ExperimentConfig {
  fs::path raster;
  fs::path scene_config;
  RiskParams risk;
  std::vector<double> render_altitudes;  // empty: every layer
  AircraftPerformance perf;
  std::vector<QuerySpec> queries;
  fs::path fleet;
  SoaConfig soa;
  SweepSpec sweep;
};

struct RunOptions {
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool timing = false;
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

inline Point3 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("points are [x, y, z] in metres");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline AircraftPerformance perf_from_json(const nlohmann::json& j) {
  AircraftPerformance p;
  p.h_min = j.value("h_min", p.h_min);
  p.h_max = j.value("h_max", p.h_max);
  p.max_range = j.value("L_e", p.max_range);
  p.max_takeoff_mass = j.value("m_max", p.max_takeoff_mass);
  p.empty_mass = j.value("m_e", p.empty_mass);
  p.payload_max = j.value("m_p_max", p.payload_max);
  p.wind_max = j.value("v_we", p.wind_max);
  p.cruise_speed = j.value("v_g", p.cruise_speed);
  p.energy_horizontal = j.value("c_h", p.energy_horizontal);
  p.energy_vertical = j.value("c_v", p.energy_vertical);
  p.energy_cost = j.value("c_e", p.energy_cost);
  p.full_load_factor = j.value("tau_max", p.full_load_factor);
  p.validate();
  return p;
}

inline QuerySpec query_from_json(const nlohmann::json& j) {
  QuerySpec s;
  s.name = j.at("name").get<std::string>();
  s.origin = point_from_json(j.at("origin"));
  s.destination = point_from_json(j.at("destination"));
  TrackQuery& q = s.query;
  q.w_risk = j.value("w_risk", q.w_risk);
  q.w_transport = j.value("w_transport", q.w_transport);
  q.airspace_min = j.value("airspace_min", q.airspace_min);
  q.airspace_max = j.value("airspace_max", q.airspace_max);
  q.clearance = j.value("clearance", q.clearance);
  q.penalty = j.value("penalty", q.penalty);
  q.payload = j.value("payload", q.payload);
  q.wind = j.value("wind", q.wind);
  q.risk_unit = j.value("risk_unit", q.risk_unit);
  q.tie_weight = j.value("tie_weight", q.tie_weight);
  q.validate();
  return s;
}

inline SoaConfig soa_from_json(const nlohmann::json& j) {
  SoaConfig c;
  c.weights.w_delay = j.value("w6", c.weights.w_delay);
  c.weights.w_flights = j.value("w7", c.weights.w_flights);
  c.population = j.value("population", c.population);
  c.generations = j.value("generations", c.generations);
  c.T0 = j.value("T0", c.T0);
  c.xi = j.value("xi", c.xi);
  c.TF = j.value("TF", c.TF);
  c.elite_fraction = j.value("elite_fraction", c.elite_fraction);
  c.bottom_fraction = j.value("bottom_fraction", c.bottom_fraction);
  c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
  c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
  c.init_swap_fraction = j.value("init_swap_fraction", c.init_swap_fraction);
  c.init_delay_prob = j.value("init_delay_prob", c.init_delay_prob);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace detail

inline ExperimentConfig load_experiment(const fs::path& path) {
  const nlohmann::json j = detail::read_json(path);
  const fs::path base = path.parent_path();
  ExperimentConfig cfg;
  try {
    const auto& scene = j.at("scene");
    cfg.raster = detail::resolve(base, scene.at("raster").get<std::string>());
    cfg.scene_config = detail::resolve(base, scene.at("config").get<std::string>());
    if (j.contains("risk")) {
      const auto& r = j.at("risk");
      cfg.risk.threshold = r.value("threshold", cfg.risk.threshold);
      if (r.contains("weights")) {
        const auto w = r.at("weights").get<std::vector<double>>();
        if (w.size() != 3) throw ConfigError("risk weights are [personnel, vehicle, uav]");
        cfg.risk.w_personnel = w[0];
        cfg.risk.w_vehicle = w[1];
        cfg.risk.w_uav = w[2];
      }
      const std::string mode = r.value("angle_mode", std::string("fixed"));
      if (mode != "fixed" && mode != "integrated") throw ConfigError("angle_mode is 'fixed' or 'integrated'");
      cfg.risk.uav.mode = mode == "fixed" ? AngleMode::kFixed : AngleMode::kIntegrated;
      cfg.risk.uav.exposure_time = r.value("exposure_time", cfg.risk.uav.exposure_time);
      cfg.risk.fall.payload_mass = r.value("payload_mass", cfg.risk.fall.payload_mass);
      cfg.render_altitudes = r.value("render_altitudes", std::vector<double>{});
    }
    cfg.perf = detail::perf_from_json(j.value("aircraft", nlohmann::json::object()));
    for (const auto& q : j.value("queries", nlohmann::json::array())) cfg.queries.push_back(detail::query_from_json(q));
    if (j.contains("fleet")) cfg.fleet = detail::resolve(base, j.at("fleet").get<std::string>());
    cfg.soa = detail::soa_from_json(j.value("soa", nlohmann::json::object()));
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      cfg.sweep.altitudes = s.value("altitudes", std::vector<double>{});
      for (const auto& c : s.value("cell_sizes", nlohmann::json::array())) {
        const auto v = c.get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("cell sizes are [dx, dy, dz]");
        cfg.sweep.cell_sizes.push_back({v[0], v[1], v[2]});
      }
      cfg.sweep.flights_per_aircraft = s.value("flights_per_aircraft", std::vector<int>{});
      cfg.sweep.speeds = s.value("speeds", std::vector<double>{});
      cfg.sweep.pareto_query = s.value("pareto_query", std::string());
      cfg.sweep.pareto_step = s.value("pareto_step", cfg.sweep.pareto_step);
      cfg.sweep.replicates = s.value("replicates", cfg.sweep.replicates);
      if (cfg.sweep.replicates < 1) throw ConfigError("sweep replicates must be >= 1");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  cfg.risk.validate();
  for (const auto& f : {cfg.raster, cfg.scene_config})
    if (!fs::exists(f)) throw IngestionError("referenced file '" + f.string() + "' does not exist");
  if (!cfg.fleet.empty() && !fs::exists(cfg.fleet))
    throw IngestionError("referenced file '" + cfg.fleet.string() + "' does not exist");
  return cfg;
}

inline UrbanScene load_experiment_scene(const ExperimentConfig& cfg) {
  return load_scene(cfg.raster.string(), scene_config_from_json(detail::read_json(cfg.scene_config)));
}

inline RiskMap experiment_risk_map(const ExperimentConfig& cfg, const UrbanScene& scene) {
  RiskParams p = cfg.risk;
  if (p.layers.empty()) p.layers = default_layer_bands(cfg.perf.h_min, scene.grid.z_max(), scene.grid.dz());
  return build_risk_map(scene, p);
}

inline FleetScenario load_fleet(const ExperimentConfig& cfg) {
  if (cfg.fleet.empty()) throw ConfigError("experiment has no fleet scenario");
  return scenario_from_json(detail::read_json(cfg.fleet));
}

// ---- risk map ----

inline std::vector<int> render_layers(const ExperimentConfig& cfg, const GridSpec& g) {
  std::vector<int> ks;
  if (cfg.render_altitudes.empty()) {
    for (int k = 1; k <= g.c(); ++k) ks.push_back(k);
  } else {
    for (double z : cfg.render_altitudes) ks.push_back(point_to_cell({0.0, 0.0, z}, g).k);
  }
  return ks;
}

inline void write_risk_outputs(const RiskMap& map, const std::vector<int>& layers, const fs::path& out) {
  fs::create_directories(out);
  io::save_text(out / "risk_map.json", risk_map_to_json(map).dump() + "\n");
  io::CsvTable counts({"k", "z", "unsafe_cells"});
  for (int k = 1; k <= map.grid.c(); ++k)
    counts.add({std::to_string(k), io::fmt((k - 0.5) * map.grid.dz()), std::to_string(map.unsafe_in_layer(k))});
  counts.save(out / "unsafe_by_layer.csv");
  for (int k : layers) {
    std::ostringstream csv;
    write_layer_csv(csv, map, k);
    io::save_text(out / ("layer_k" + std::to_string(k) + ".csv"), csv.str());
    io::save_text(out / ("heatmap_k" + std::to_string(k) + ".svg"), io::heatmap_svg(map, k));
  }
}

inline int cmd_risk_map(const ExperimentConfig& cfg, const RunOptions& opt) {
  const UrbanScene scene = load_experiment_scene(cfg);
  const RiskMap map = experiment_risk_map(cfg, scene);
  write_risk_outputs(map, render_layers(cfg, map.grid), opt.out);
  return 0;
}

// ---- planning ----

inline const std::vector<std::string>& summary_metric_labels() {
  static const std::vector<std::string> labels = {"Operational risk", "Transportation cost(¥)", "Number of waypoints",
                                                  "Computational time (s)"};
  return labels;
}

inline const std::vector<std::string>& track_stage_labels() {
  static const std::vector<std::string> labels = {"The shortest track", "The initial track", "The equivalent track",
                                                  "The optimal track"};
  return labels;
}

struct PlanOutcome {
  std::string name;
  bool feasible = false;
  std::string error;
  std::optional<StagedTracks> stages;
};

inline PlanOutcome plan_query(const QuerySpec& spec, const RiskMap& map, const AircraftPerformance& perf) {
  PlanOutcome out{spec.name, false, {}, std::nullopt};
  try {
    out.stages = plan_all_stages(spec.on(map.grid), map, perf);
    out.feasible = true;
  } catch (const InfeasibleError& e) {
    out.error = e.what();
  }
  return out;
}

inline void add_track_rows(io::CsvTable& t, const Track& track) {
  for (std::size_t n = 0; n < track.waypoints.size(); ++n) {
    const auto& p = track.waypoints[n];
    t.add({stage_name(track.stage), std::to_string(n + 1), io::fmt(p.x, 10), io::fmt(p.y, 10), io::fmt(p.z, 10),
           io::fixed(track.times[n], 3)});
  }
}

inline void write_plan_outputs(const std::vector<PlanOutcome>& outcomes, const fs::path& out, bool timing) {
  fs::create_directories(out);
  std::vector<std::string> cols{"query", "track"};
  for (const auto& l : summary_metric_labels()) cols.push_back(l);
  cols.push_back("status");
  cols.push_back("expanded_nodes");
  io::CsvTable summary(cols);
  for (const auto& o : outcomes) {
    if (!o.feasible) {
      for (const auto& label : track_stage_labels()) summary.add({o.name, label, "", "", "", "", "infeasible", ""});
      continue;
    }
    const auto& st = *o.stages;
    const Track* tracks[4] = {st.shortest ? &st.shortest->track : nullptr, &st.initial.track, &st.equivalent,
                              &st.smoothed};
    const double secs[4] = {st.shortest ? st.shortest->seconds : 0.0, st.initial.seconds, st.seconds_equivalent,
                            st.seconds_smoothed};
    const std::size_t nodes[4] = {st.shortest ? st.shortest->expanded : 0, st.initial.expanded, st.initial.expanded,
                                  st.initial.expanded};
    io::CsvTable stage_table({"Index", track_stage_labels()[0], track_stage_labels()[1], track_stage_labels()[2],
                         track_stage_labels()[3]});
    std::vector<std::vector<std::string>> cells(4, std::vector<std::string>(4));
    io::CsvTable tracks_csv({"stage", "n", "x", "y", "z", "T_n"});
    for (int s = 0; s < 4; ++s) {
      const Track* t = tracks[s];
      if (!t) {
        summary.add({o.name, track_stage_labels()[s], "", "", "", "", "infeasible", ""});
        continue;
      }
      add_track_rows(tracks_csv, *t);
      cells[0][s] = io::fmt(t->cost.risk, 8);
      cells[1][s] = io::fixed(t->cost.transport, 4);
      cells[2][s] = std::to_string(t->size());
      cells[3][s] = timing ? io::fixed(secs[s], 4) : "";
      summary.add({o.name, track_stage_labels()[s], cells[0][s], cells[1][s], cells[2][s], cells[3][s], "ok",
                   std::to_string(nodes[s])});
    }
    for (int m = 0; m < 4; ++m)
      stage_table.add({summary_metric_labels()[m], cells[m][0], cells[m][1], cells[m][2], cells[m][3]});
    stage_table.save(out / ("table_" + o.name + ".csv"));
    tracks_csv.save(out / ("tracks_" + o.name + ".csv"));
  }
  summary.save(out / "summary.csv");
}

inline int cmd_plan(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.queries.empty()) throw ConfigError("experiment lists no planner queries");
  const UrbanScene scene = load_experiment_scene(cfg);
  const RiskMap map = experiment_risk_map(cfg, scene);
  std::vector<PlanOutcome> outcomes;
  for (const auto& q : cfg.queries) outcomes.push_back(plan_query(q, map, cfg.perf));
  write_plan_outputs(outcomes, opt.out, opt.timing);
  const bool any = std::any_of(outcomes.begin(), outcomes.end(), [](const PlanOutcome& o) { return o.feasible; });
  return any ? 0 : static_cast<int>(ExitCode::kInfeasible);
}

// ---- scheduling ----

struct ScheduleRun {
  Schedule base;
  ScheduleMetrics base_metrics;
  OptimizationResult soa;
  std::optional<OptimizationResult> ga;
};

inline void require_clean(const FleetScenario& s, const Schedule& sched, const std::string& label) {
  const auto conflicts = audit_conflicts(s, sched);
  if (!conflicts.empty())
    throw Error(label + " schedule failed the conflict audit between " + s.flight_name(conflicts.front().a) + " and " +
                s.flight_name(conflicts.front().b));
  const auto regs = audit_regulations(s, sched);
  if (!regs.empty()) throw Error(label + " schedule failed the regulation audit: " + regs.front());
}

inline ScheduleRun run_schedule(const FleetScenario& s, const SoaConfig& cfg, bool with_ga, bool audit = true) {
  const ConflictModel model(s);
  ScheduleRun run;
  run.base = build_initial_schedule(model);
  run.base_metrics = objective(s, run.base, cfg.weights);
  run.soa = optimize_schedule(model, cfg);
  if (with_ga) run.ga = run_baseline_ga(model, cfg);
  if (audit) {
    require_clean(s, run.base, "base");
    require_clean(s, run.soa.schedule, "optimised");
    if (run.ga) require_clean(s, run.ga->schedule, "baseline GA");
  }
  return run;
}

inline std::string delay_cell(const Schedule& s, std::size_t n) {
  return s.operate[n] ? std::to_string(s.delay[n]) : "cancelled";
}

inline std::string rate_of_change(const Schedule& soa, const Schedule& ga, std::size_t n) {
  if (!soa.operate[n] || !ga.operate[n]) return "";
  if (ga.delay[n] == 0) return soa.delay[n] == 0 ? "0.00%" : "";
  return io::fixed(100.0 * (soa.delay[n] - ga.delay[n]) / ga.delay[n], 2) + "%";
}

inline void write_schedule_outputs(const FleetScenario& s, const ScheduleRun& run, const fs::path& out) {
  fs::create_directories(out);
  const Schedule& ga = run.ga ? run.ga->schedule : run.soa.schedule;
  io::CsvTable table({"flight", "aircraft", "flight_index", "route", "direction", "planned_departure",
                      "Delay before optimization (s)", "Results of SOA (s)", "Results of GA (s)", "Rate of change"});
  for (std::size_t n = 0; n < s.flights.size(); ++n) {
    const auto& f = s.flights[n];
    const int from = f.forward ? s.network.routes[f.route].from : s.network.routes[f.route].to;
    const int to = f.forward ? s.network.routes[f.route].to : s.network.routes[f.route].from;
    table.add({s.flight_name(n), std::to_string(s.aircraft[f.aircraft].id), std::to_string(f.flight),
               s.network.vertiports[from].name + "-" + s.network.vertiports[to].name,
               f.direction == Direction::kOutbound ? "outbound" : "inbound", io::fmt(f.departure, 10),
               delay_cell(run.base, n), delay_cell(run.soa.schedule, n), delay_cell(ga, n),
               rate_of_change(run.soa.schedule, ga, n)});
  }
  table.save(out / "schedule.csv");

  io::CsvTable summary({"plan", "operated_flights", "cancelled_flights", "delayed_flights", "total_delay_s",
                        "average_delay_s", "W"});
  auto add = [&](const std::string& name, const ScheduleMetrics& m) {
    summary.add({name, std::to_string(m.S), std::to_string(m.cancelled), std::to_string(m.delayed),
                 std::to_string(m.total_delay), io::fixed(m.T_d, 2), io::fixed(m.W, 4)});
  };
  add("base", run.base_metrics);
  add("SOA", run.soa.metrics);
  if (run.ga) add("GA", run.ga->metrics);
  summary.save(out / "summary.csv");

  auto trace_table = [&](const std::vector<TraceRow>& tr, const fs::path& path) {
    io::CsvTable t({"generation", "best_W", "T_d", "S"});
    for (const auto& r : tr)
      t.add({std::to_string(r.generation), io::fixed(r.best_W, 4), io::fixed(r.T_d, 2), std::to_string(r.S)});
    t.save(path);
  };
  trace_table(run.soa.trace, out / "trace_soa.csv");
  std::vector<io::Series> series;
  auto to_series = [](const std::vector<TraceRow>& tr, const std::string& name, const std::string& colour) {
    io::Series se{name, {}, {}, colour};
    for (const auto& r : tr) {
      se.x.push_back(r.generation);
      se.y.push_back(r.best_W);
    }
    return se;
  };
  series.push_back(to_series(run.soa.trace, "SOA", "#b40426"));
  if (run.ga) {
    trace_table(run.ga->trace, out / "trace_ga.csv");
    series.push_back(to_series(run.ga->trace, "GA", "#3b4cc0"));
  }
  io::save_text(out / "convergence.svg", io::line_chart_svg("Best W per generation", "generation", "W", series));

  std::vector<io::Series> bars;
  auto delays = [&](const Schedule& sc, const std::string& name, const std::string& colour) {
    io::Series se{name, {}, {}, colour};
    for (std::size_t n = 0; n < s.flights.size(); ++n) {
      se.x.push_back(static_cast<double>(n + 1));
      se.y.push_back(sc.operate[n] ? sc.delay[n] : 0.0);
    }
    return se;
  };
  bars.push_back(delays(run.base, "before", "#555555"));
  bars.push_back(delays(run.soa.schedule, "SOA", "#b40426"));
  if (run.ga) bars.push_back(delays(run.ga->schedule, "GA", "#3b4cc0"));
  io::save_text(out / "delays.svg", io::line_chart_svg("Delay per flight", "flight", "delay (s)", bars));
  io::save_text(out / "scenario_expanded.json", scenario_to_json(s, true).dump(2) + "\n");
}

inline SoaConfig effective_soa(const ExperimentConfig& cfg, const RunOptions& opt) {
  SoaConfig c = cfg.soa;
  if (opt.seed) c.seed = *opt.seed;
  c.workers = std::max(1, opt.workers);
  return c;
}

inline int cmd_schedule(const ExperimentConfig& cfg, const RunOptions& opt) {
  const FleetScenario s = load_fleet(cfg);
  const ScheduleRun run = run_schedule(s, effective_soa(cfg, opt), true);
  write_schedule_outputs(s, run, opt.out);
  return 0;
}

// ---- sweeps ----

// Flags each point that no other point dominates (both coordinates <=, one strictly <).
inline std::vector<bool> nondominated(const std::vector<std::pair<double, double>>& pts) {
  std::vector<bool> keep(pts.size(), true);
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (a == b) continue;
      const bool le = pts[b].first <= pts[a].first && pts[b].second <= pts[a].second;
      const bool lt = pts[b].first < pts[a].first || pts[b].second < pts[a].second;
      if (le && lt) keep[a] = false;
    }
  return keep;
}

// Runs jobs[i] on up to `workers` threads; results land at their own index.
template <class Result>
std::vector<Result> run_parallel(const std::vector<std::function<Result()>>& jobs, int workers) {
  std::vector<Result> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const std::size_t nw = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < nw; ++t)
    threads.emplace_back([&, t] {
      for (std::size_t n = t; n < jobs.size(); n += nw) {
        try {
          out[n] = jobs[n]();
        } catch (...) {
          errors[n] = std::current_exception();
        }
      }
    });
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

using Row = std::vector<std::string>;

struct SweepResult {
  io::CsvTable altitude{{"altitude_m", "k", "unsafe_cells", "status"}};
  io::CsvTable cell_size{{"dx", "dy", "dz", "Operational risk", "Transportation cost(¥)", "Number of waypoints",
                          "Computational time (s)", "status"}};
  io::CsvTable flights{{"flights_per_aircraft", "planned_flights", "base_average_delay_s", "SOA_average_delay_s",
                        "base_operated", "SOA_operated", "status"}};
  io::CsvTable speed{{"speed_mps", "base_average_delay_s", "SOA_average_delay_s", "base_operated", "SOA_operated",
                      "status"}};
  io::CsvTable pareto{{"w_risk", "w_transport", "C_R", "C_T", "nondominated", "status"}};
};

inline const QuerySpec& find_query(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& q : cfg.queries)
    if (q.name == name || name.empty()) return q;
  throw ConfigError("unknown query '" + name + "'");
}

inline std::string point_dir(const std::string& axis, const std::string& value) { return axis + "_" + value; }

inline SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto& sw = cfg.sweep;
  if (sw.altitudes.empty() && sw.cell_sizes.empty() && sw.flights_per_aircraft.empty() && sw.speeds.empty() &&
      sw.pareto_query.empty())
    throw ConfigError("sweep axes are empty");
  const UrbanScene scene = load_experiment_scene(cfg);
  const RiskMap map = experiment_risk_map(cfg, scene);
  const fs::path root = opt.out;
  SweepResult res;
  SoaConfig soa = effective_soa(cfg, opt);
  soa.workers = 1;

  std::vector<std::function<Row()>> jobs;
  std::vector<int> axis_of;
  auto failed = [](const std::exception& e, std::size_t width) {
    Row r(width, "");
    r.back() = std::string("failed: ") + e.what();
    return r;
  };

  for (double z : sw.altitudes) {
    axis_of.push_back(0);
    jobs.push_back([&, z]() -> Row {
      try {
        const int k = point_to_cell({0.0, 0.0, z}, map.grid).k;
        const fs::path dir = root / "sweep" / point_dir("altitude", io::fmt(z));
        write_risk_outputs(map, {k}, dir);
        return {io::fmt(z), std::to_string(k), std::to_string(map.unsafe_in_layer(k)), "ok"};
      } catch (const std::exception& e) {
        Row r = failed(e, 4);
        r[0] = io::fmt(z);
        return r;
      }
    });
  }
  for (const auto& cs : sw.cell_sizes) {
    axis_of.push_back(1);
    jobs.push_back([&, cs]() -> Row {
      const std::string tag = io::fmt(cs[0]) + "x" + io::fmt(cs[1]) + "x" + io::fmt(cs[2]);
      try {
        const bool same = cs[0] == scene.grid.dx() && cs[1] == scene.grid.dy() && cs[2] == scene.grid.dz();
        const UrbanScene sc = same ? scene : resample_scene(scene, cs[0], cs[1], cs[2]);
        const RiskMap m = same ? map : experiment_risk_map(cfg, sc);
        const PlanOutcome o = plan_query(find_query(cfg, sw.pareto_query), m, cfg.perf);
        write_plan_outputs({o}, root / "sweep" / point_dir("cell", tag), opt.timing);
        if (!o.feasible) return {io::fmt(cs[0]), io::fmt(cs[1]), io::fmt(cs[2]), "", "", "", "", "infeasible"};
        const Track& t = o.stages->smoothed;
        return {io::fmt(cs[0]), io::fmt(cs[1]), io::fmt(cs[2]), io::fmt(t.cost.risk, 8), io::fixed(t.cost.transport, 4),
                std::to_string(t.size()), opt.timing ? io::fixed(o.stages->seconds_smoothed, 4) : "", "ok"};
      } catch (const std::exception& e) {
        Row r = failed(e, 8);
        r[0] = io::fmt(cs[0]);
        r[1] = io::fmt(cs[1]);
        r[2] = io::fmt(cs[2]);
        return r;
      }
    });
  }
  struct FleetPoint {
    std::size_t planned = 0;
    double base_delay = 0.0, soa_delay = 0.0, base_operated = 0.0, soa_operated = 0.0;
  };
  // Mean over `replicates` generator seeds starting at the file's seed.
  auto fleet_point = [&](const std::string& axis, const std::string& value,
                         const std::function<void(FleetGenerator&)>& tweak) {
    const FleetScenario base = load_fleet(cfg);
    if (!base.generator) throw ConfigError("fleet sweeps need a scenario with a 'generate' block");
    FleetPoint p;
    for (int r = 0; r < sw.replicates; ++r) {
      FleetGenerator gen = *base.generator;
      gen.seed += static_cast<std::uint64_t>(r);
      tweak(gen);
      const FleetScenario s = generate_scenario(base.grid, base.network, base.regulations, gen);
      const ScheduleRun run = run_schedule(s, soa, false);
      write_schedule_outputs(s, run, root / "sweep" / point_dir(axis, value) / ("seed_" + std::to_string(gen.seed)));
      p.planned = s.flights.size();
      p.base_delay += run.base_metrics.T_d / sw.replicates;
      p.soa_delay += run.soa.metrics.T_d / sw.replicates;
      p.base_operated += static_cast<double>(run.base_metrics.S) / sw.replicates;
      p.soa_operated += static_cast<double>(run.soa.metrics.S) / sw.replicates;
    }
    return p;
  };
  for (int F : sw.flights_per_aircraft) {
    axis_of.push_back(2);
    jobs.push_back([&, F]() -> Row {
      try {
        const FleetPoint p = fleet_point("flights", std::to_string(F), [F](FleetGenerator& g) { g.flights_per_aircraft = F; });
        return {std::to_string(F), std::to_string(p.planned), io::fixed(p.base_delay, 2), io::fixed(p.soa_delay, 2),
                io::fmt(p.base_operated), io::fmt(p.soa_operated), "ok"};
      } catch (const std::exception& e) {
        Row r = failed(e, 7);
        r[0] = std::to_string(F);
        return r;
      }
    });
  }
  for (double v : sw.speeds) {
    axis_of.push_back(3);
    jobs.push_back([&, v]() -> Row {
      try {
        const FleetPoint p = fleet_point("speed", io::fmt(v), [v](FleetGenerator& g) { g.speed = v; });
        return {io::fmt(v), io::fixed(p.base_delay, 2), io::fixed(p.soa_delay, 2), io::fmt(p.base_operated),
                io::fmt(p.soa_operated), "ok"};
      } catch (const std::exception& e) {
        Row r = failed(e, 6);
        r[0] = io::fmt(v);
        return r;
      }
    });
  }
  std::vector<double> weights;
  if (!sw.pareto_query.empty()) {
    if (!(sw.pareto_step > 0 && sw.pareto_step <= 1)) throw ConfigError("pareto_step must lie in (0,1]");
    const int steps = static_cast<int>(std::lround(1.0 / sw.pareto_step));
    for (int n = 0; n <= steps; ++n) weights.push_back(std::min(1.0, n * sw.pareto_step));
    for (double w : weights) {
      axis_of.push_back(4);
      jobs.push_back([&, w]() -> Row {
        try {
          QuerySpec q = find_query(cfg, sw.pareto_query);
          q.query.w_risk = w;
          q.query.w_transport = 1.0 - w;
          const PlanResult r = plan_initial_track(q.on(map.grid), map, cfg.perf);
          io::CsvTable t({"stage", "n", "x", "y", "z", "T_n"});
          add_track_rows(t, r.track);
          t.save(root / "sweep" / point_dir("pareto", io::fixed(w, 2)) / "track.csv");
          return {io::fixed(w, 2), io::fixed(1.0 - w, 2), io::fmt(r.track.cost.risk, 10),
                  io::fmt(r.track.cost.transport, 10), "", "ok"};
        } catch (const std::exception& e) {
          Row r = failed(e, 6);
          r[0] = io::fixed(w, 2);
          r[1] = io::fixed(1.0 - w, 2);
          return r;
        }
      });
    }
  }

  const auto rows = run_parallel(jobs, opt.workers);
  std::vector<Row> pareto_rows;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    switch (axis_of[n]) {
      case 0: res.altitude.add(rows[n]); break;
      case 1: res.cell_size.add(rows[n]); break;
      case 2: res.flights.add(rows[n]); break;
      case 3: res.speed.add(rows[n]); break;
      default: pareto_rows.push_back(rows[n]);
    }
  }
  std::vector<std::pair<double, double>> pts;
  std::vector<std::size_t> ok_rows;
  for (std::size_t n = 0; n < pareto_rows.size(); ++n)
    if (pareto_rows[n].back() == "ok") {
      pts.push_back({std::stod(pareto_rows[n][2]), std::stod(pareto_rows[n][3])});
      ok_rows.push_back(n);
    }
  const auto keep = nondominated(pts);
  for (std::size_t m = 0; m < ok_rows.size(); ++m) pareto_rows[ok_rows[m]][4] = keep[m] ? "1" : "0";
  for (auto& r : pareto_rows) res.pareto.add(r);
  return res;
}

inline void write_sweep_outputs(const SweepResult& res, const fs::path& out) {
  fs::create_directories(out);
  res.altitude.save(out / "sweep_altitude.csv");
  res.cell_size.save(out / "sweep_cell_size.csv");
  res.flights.save(out / "sweep_flights.csv");
  res.speed.save(out / "sweep_speed.csv");
  res.pareto.save(out / "pareto.csv");

  auto numeric = [](const io::CsvTable& t, std::size_t xcol, std::size_t ycol, const std::string& name,
                    const std::string& colour) {
    io::Series s{name, {}, {}, colour};
    for (const auto& r : t.rows())
      if (r.back() == "ok" && !r[xcol].empty() && !r[ycol].empty()) {
        s.x.push_back(std::stod(r[xcol]));
        s.y.push_back(std::stod(r[ycol]));
      }
    return s;
  };
  if (!res.altitude.rows().empty())
    io::save_text(out / "altitude.svg", io::line_chart_svg("Unsafe cells per layer", "altitude (m)", "unsafe cells",
                                                           {numeric(res.altitude, 0, 2, "unsafe", "#b40426")}));
  if (!res.flights.rows().empty())
    io::save_text(out / "flights.svg",
                  io::line_chart_svg("Average delay vs flights per aircraft", "flights per aircraft", "average delay (s)",
                                     {numeric(res.flights, 0, 2, "before", "#555555"),
                                      numeric(res.flights, 0, 3, "SOA", "#b40426")}));
  if (!res.speed.rows().empty())
    io::save_text(out / "speed.svg", io::line_chart_svg("Average delay vs cruise speed", "speed (m/s)", "average delay (s)",
                                                        {numeric(res.speed, 0, 1, "before", "#555555"),
                                                         numeric(res.speed, 0, 2, "SOA", "#b40426")}));
  if (!res.pareto.rows().empty())
    io::save_text(out / "pareto.svg", io::line_chart_svg("Risk and cost of returned optima", "C_R", "C_T",
                                                         {numeric(res.pareto, 2, 3, "optima", "#3b4cc0")}));
}

inline int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  write_sweep_outputs(run_sweep(cfg, opt), opt.out);
  return 0;
}

}  // namespace uam
