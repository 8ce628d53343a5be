#pragma once

// Schedule optimisation: a genetic algorithm whose selection step anneals the weakest
// individuals, with elitism and fitness-dependent crossover and mutation operators, plus a
// plain roulette-wheel GA as a baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "uam/error.hpp"
#include "uam/fleet_scheduler.hpp"

namespace uam {

struct SoaConfig {
  ObjectiveWeights weights;
  int population = 50;
  int generations = 200;
  double T0 = 100.0;
  double xi = 0.99;
  double TF = 0.1;
  double elite_fraction = 0.1;
  double bottom_fraction = 0.1;
  double crossover_rate = 0.8;
  double mutation_rate = 0.05;     // per gene
  double init_swap_fraction = 0.1; // random swaps per flight when seeding the population
  double init_delay_prob = 0.1;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    if (!(xi > 0 && xi < 1)) throw ConfigError("annealing factor must lie in (0,1)");
    if (!(TF < T0) || !(TF > 0)) throw ConfigError("final temperature must satisfy 0 < T_F < T_0");
    if (generations <= 0) throw ConfigError("generation count must be > 0");
    if (population < 2) throw ConfigError("population must hold at least 2 individuals");
    for (double p : {elite_fraction, bottom_fraction, crossover_rate, mutation_rate, init_delay_prob})
      if (p < 0 || p > 1) throw ConfigError("rates and fractions must lie in [0,1]");
    if (init_swap_fraction < 0) throw ConfigError("swap fraction must be >= 0");
  }
};

// Per-flight slot: rank in the resolution order and preferred delay.
struct Genome {
  std::vector<int> pos;
  std::vector<int> delay;

  std::size_t size() const { return pos.size(); }
  bool operator==(const Genome&) const = default;
};

struct GenomeLimits {
  std::vector<int> cap;  // per flight, already a multiple of the quantum
  int quantum = 10;

  static GenomeLimits from(const FleetScenario& s) {
    GenomeLimits l;
    l.quantum = s.regulations.quantum;
    for (const auto& f : s.flights) l.cap.push_back(f.cap / l.quantum * l.quantum);
    return l;
  }
};

inline bool genome_valid(const Genome& g, const GenomeLimits& lim) {
  const std::size_t n = g.size();
  if (g.delay.size() != n || lim.cap.size() != n) return false;
  std::vector<char> seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.pos[i] < 0 || g.pos[i] >= static_cast<int>(n) || seen[g.pos[i]]) return false;
    seen[g.pos[i]] = 1;
    if (g.delay[i] < 0 || g.delay[i] > lim.cap[i] || g.delay[i] % lim.quantum != 0) return false;
  }
  return true;
}

// Restores a permutation (stable on slot index) and clamps delays into their caps.
inline void repair(Genome& g, const GenomeLimits& lim) {
  const std::size_t n = g.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return g.pos[a] < g.pos[b]; });
  for (std::size_t r = 0; r < n; ++r) g.pos[idx[r]] = static_cast<int>(r);
  for (std::size_t i = 0; i < n; ++i) {
    g.delay[i] = std::clamp(g.delay[i], 0, lim.cap[i]);
    g.delay[i] -= g.delay[i] % lim.quantum;
  }
}

inline std::vector<std::size_t> genome_order(const Genome& g) {
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) order[g.pos[i]] = i;
  return order;
}

inline Genome genome_from(const std::vector<std::size_t>& order, const std::vector<int>& delay) {
  Genome g{std::vector<int>(order.size()), delay};
  for (std::size_t r = 0; r < order.size(); ++r) g.pos[order[r]] = static_cast<int>(r);
  return g;
}

// Swaps slots [cut, n) between the parents.
inline std::pair<Genome, Genome> single_point_crossover(const Genome& a, const Genome& b, std::size_t cut,
                                                        const GenomeLimits& lim) {
  Genome x = a, y = b;
  for (std::size_t i = std::min(cut, a.size()); i < a.size(); ++i) {
    std::swap(x.pos[i], y.pos[i]);
    std::swap(x.delay[i], y.delay[i]);
  }
  repair(x, lim);
  repair(y, lim);
  return {x, y};
}

// Swaps slots [lo, hi) between the parents.
inline std::pair<Genome, Genome> two_point_crossover(const Genome& a, const Genome& b, std::size_t lo, std::size_t hi,
                                                     const GenomeLimits& lim) {
  Genome x = a, y = b;
  for (std::size_t i = lo; i < std::min(hi, a.size()); ++i) {
    std::swap(x.pos[i], y.pos[i]);
    std::swap(x.delay[i], y.delay[i]);
  }
  repair(x, lim);
  repair(y, lim);
  return {x, y};
}

template <class Rng>
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, bool below_mean, Rng& rng,
                                    const GenomeLimits& lim) {
  if (a.size() != b.size()) throw DomainError("crossover needs equal-length genomes");
  const std::size_t n = a.size();
  if (n < 2) return {a, b};
  if (below_mean) {
    std::uniform_int_distribution<std::size_t> cut(1, n - 1);
    return single_point_crossover(a, b, cut(rng), lim);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n);
  std::size_t lo = pick(rng), hi = pick(rng);
  if (lo > hi) std::swap(lo, hi);
  return two_point_crossover(a, b, lo, hi, lim);
}

namespace detail {
// Moves slot i to rank r, shifting the ranks in between.
inline void move_to_rank(Genome& g, std::size_t i, int r) {
  const int old = g.pos[i];
  for (auto& p : g.pos) {
    if (old < r && p > old && p <= r) --p;
    if (old > r && p < old && p >= r) ++p;
  }
  g.pos[i] = r;
}

template <class Rng>
int draw_delay(const GenomeLimits& lim, std::size_t i, Rng& rng) {
  std::uniform_int_distribution<int> d(0, lim.cap[i] / lim.quantum);
  return d(rng) * lim.quantum;
}

template <class Rng>
bool mutate_gene(Genome& g, std::size_t gene, bool force_change, Rng& rng, const GenomeLimits& lim) {
  const std::size_t n = g.size();
  if (gene >= n) {
    const std::size_t i = gene - n;
    const int steps = lim.cap[i] / lim.quantum;
    if (!force_change) {
      g.delay[i] = draw_delay(lim, i, rng);
      return true;
    }
    if (steps == 0) return false;
    std::uniform_int_distribution<int> d(0, steps - 1);
    int v = d(rng) * lim.quantum;
    if (v >= g.delay[i]) v += lim.quantum;
    g.delay[i] = v;
    return true;
  }
  if (n < 2) return false;
  std::uniform_int_distribution<int> d(0, static_cast<int>(n) - (force_change ? 2 : 1));
  int r = d(rng);
  if (force_change && r >= g.pos[gene]) ++r;
  move_to_rank(g, gene, r);
  return true;
}
}  // namespace detail

// Below-mean individuals mutate every gene independently with probability `rate`; the others
// mutate one gene with probability min(1, rate * genes). Delay genes stay in their cap.
template <class Rng>
void mutate(Genome& g, bool below_mean, double rate, Rng& rng, const GenomeLimits& lim) {
  const std::size_t genes = 2 * g.size();
  if (rate <= 0 || genes == 0) return;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (below_mean) {
    for (std::size_t k = 0; k < genes; ++k)
      if (u(rng) < rate) detail::mutate_gene(g, k, false, rng, lim);
    return;
  }
  if (u(rng) >= std::min(1.0, rate * static_cast<double>(genes))) return;
  std::uniform_int_distribution<std::size_t> pick(0, genes - 1);
  for (int attempt = 0; attempt < 64; ++attempt)
    if (detail::mutate_gene(g, pick(rng), true, rng, lim)) return;
}

struct NormalizedFitness {
  std::vector<double> normalized;  // W'
  std::vector<double> fitness;     // W' gated by feasibility
};

inline NormalizedFitness normalize_fitness(const std::vector<double>& W, const std::vector<char>& feasible) {
  if (W.empty()) throw DomainError("population is empty");
  if (feasible.size() != W.size()) throw DomainError("feasibility flags do not match the population");
  NormalizedFitness out{std::vector<double>(W.size(), 0.0), std::vector<double>(W.size(), 0.0)};
  const auto [lo, hi] = std::minmax_element(W.begin(), W.end());
  const double span = *hi - *lo;
  for (std::size_t n = 0; n < W.size(); ++n) {
    out.normalized[n] = span > 0 ? (*hi - W[n]) / span : 1.0;
    out.fitness[n] = feasible[n] ? out.normalized[n] : 0.0;
  }
  return out;
}

inline double temperature(double T0, double xi, int generation) { return T0 * std::pow(xi, generation); }

// Keeps the candidate outright unless it is worse than the incumbent; a worse candidate
// survives with probability exp((q_candidate - q_incumbent) / T).
template <class Rng>
bool sa_accept(double q_candidate, double q_incumbent, double T, Rng& rng) {
  if (!(q_candidate < q_incumbent)) return true;
  if (!(T > 0)) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp((q_candidate - q_incumbent) / T);
}

// Parent pool of `pool_size` indices. Infeasible individuals are dropped; the bottom group is
// paired off and one member of each pair survives by annealed acceptance; the pool is then
// refilled from the top of the ranking.
template <class Rng>
std::vector<std::size_t> sa_select(const std::vector<double>& fitness, const std::vector<char>& feasible,
                                   std::size_t pool_size, double T, double bottom_fraction, Rng& rng) {
  std::vector<std::size_t> ranked;
  for (std::size_t n = 0; n < fitness.size(); ++n)
    if (feasible[n]) ranked.push_back(n);
  if (ranked.empty()) return {};
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  std::size_t nb = static_cast<std::size_t>(std::floor(bottom_fraction * static_cast<double>(ranked.size())));
  nb -= nb % 2;
  std::vector<std::size_t> pool(ranked.begin(), ranked.end() - static_cast<long>(nb));
  for (std::size_t m = ranked.size() - nb; m + 1 < ranked.size(); m += 2) {
    const std::size_t inc = ranked[m], cand = ranked[m + 1];  // cand has the lower fitness
    pool.push_back(sa_accept(fitness[cand], fitness[inc], T, rng) ? cand : inc);
  }
  for (std::size_t r = 0; pool.size() < pool_size; r = (r + 1) % ranked.size()) pool.push_back(ranked[r]);
  pool.resize(std::min(pool.size(), pool_size));
  return pool;
}

template <class Rng>
std::vector<std::size_t> roulette_select(const std::vector<double>& fitness, std::size_t pool_size, Rng& rng) {
  const double total = std::accumulate(fitness.begin(), fitness.end(), 0.0);
  std::vector<std::size_t> pool;
  if (fitness.empty()) return pool;
  std::uniform_real_distribution<double> u(0.0, total > 0 ? total : 1.0);
  std::uniform_int_distribution<std::size_t> uniform(0, fitness.size() - 1);
  while (pool.size() < pool_size) {
    if (!(total > 0)) {
      pool.push_back(uniform(rng));
      continue;
    }
    double x = u(rng);
    std::size_t n = 0;
    for (; n + 1 < fitness.size(); ++n) {
      if (x < fitness[n]) break;
      x -= fitness[n];
    }
    pool.push_back(n);
  }
  return pool;
}

struct TraceRow {
  int generation = 0;
  double best_W = 0.0;
  double T_d = 0.0;
  int S = 0;
};

struct OptimizationResult {
  Genome genome;
  Schedule schedule;
  ScheduleMetrics metrics;
  std::vector<TraceRow> trace;
};

struct Evaluation {
  Schedule schedule;
  ScheduleMetrics metrics;
  bool feasible = false;
};

inline Evaluation evaluate_genome(const ConflictModel& model, const Genome& g, const ObjectiveWeights& w) {
  Evaluation e;
  e.schedule = decode_schedule(model, genome_order(g), g.delay);
  e.metrics = objective(model.scenario(), e.schedule, w);
  const auto& s = model.scenario();
  e.feasible = true;
  for (std::size_t n = 0; n < s.flights.size() && e.feasible; ++n)
    if (e.schedule.operate[n] && (e.schedule.delay[n] < 0 || e.schedule.delay[n] > s.flights[n].cap)) e.feasible = false;
  return e;
}

inline std::vector<Evaluation> evaluate_population(const ConflictModel& model, const std::vector<Genome>& pop,
                                                   const ObjectiveWeights& w, int workers) {
  std::vector<Evaluation> out(pop.size());
  const std::size_t nw = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, pop.size());
  if (nw <= 1) {
    for (std::size_t n = 0; n < pop.size(); ++n) out[n] = evaluate_genome(model, pop[n], w);
    return out;
  }
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < nw; ++t)
    threads.emplace_back([&, t] {
      for (std::size_t n = t; n < pop.size(); n += nw) out[n] = evaluate_genome(model, pop[n], w);
    });
  for (auto& th : threads) th.join();
  return out;
}

// Base individual (departure order, no preferred delays) plus random perturbations of it.
inline std::vector<Genome> initial_population(const FleetScenario& s, const SoaConfig& cfg) {
  const GenomeLimits lim = GenomeLimits::from(s);
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = s.flights.size();
  const Genome base = genome_from(departure_order(s), std::vector<int>(n, 0));
  std::vector<Genome> pop{base};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t swaps = static_cast<std::size_t>(std::ceil(cfg.init_swap_fraction * static_cast<double>(n)));
  while (pop.size() < static_cast<std::size_t>(cfg.population)) {
    Genome g = base;
    if (n >= 2) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t k = 0; k < swaps; ++k) std::swap(g.pos[pick(rng)], g.pos[pick(rng)]);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (u(rng) < cfg.init_delay_prob) g.delay[i] = detail::draw_delay(lim, i, rng);
    pop.push_back(std::move(g));
  }
  return pop;
}

namespace detail {

enum class Variant { kAnnealed, kRoulette };

inline OptimizationResult run_ga(const ConflictModel& model, const SoaConfig& cfg, Variant variant) {
  cfg.validate();
  const FleetScenario& s = model.scenario();
  const GenomeLimits lim = GenomeLimits::from(s);
  std::vector<Genome> pop = initial_population(s, cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t P = pop.size();
  const std::size_t elites =
      variant == Variant::kAnnealed ? static_cast<std::size_t>(std::ceil(cfg.elite_fraction * static_cast<double>(P))) : 0;

  OptimizationResult best;
  bool have_best = false;
  for (int l = 0; l < cfg.generations; ++l) {
    const auto evals = evaluate_population(model, pop, cfg.weights, cfg.workers);
    std::vector<double> W(P);
    std::vector<char> feasible(P);
    for (std::size_t n = 0; n < P; ++n) {
      W[n] = evals[n].metrics.W;
      feasible[n] = evals[n].feasible;
      if (feasible[n] && (!have_best || W[n] < best.metrics.W)) {
        best.genome = pop[n];
        best.schedule = evals[n].schedule;
        best.metrics = evals[n].metrics;
        have_best = true;
      }
    }
    if (!have_best) throw OptimizationError("no feasible schedule in generation " + std::to_string(l));
    best.trace.push_back({l, best.metrics.W, best.metrics.T_d, best.metrics.S});
    if (l + 1 == cfg.generations) break;
    const double T = temperature(cfg.T0, cfg.xi, l);
    if (variant == Variant::kAnnealed && T < cfg.TF) break;

    const auto fit = normalize_fitness(W, feasible).fitness;
    double mean = 0.0;
    for (double f : fit) mean += f;
    mean /= static_cast<double>(P);

    std::vector<Genome> next;
    next.reserve(P);
    std::vector<std::size_t> pool;
    if (variant == Variant::kAnnealed) {
      std::vector<std::size_t> ranked(P);
      std::iota(ranked.begin(), ranked.end(), 0);
      std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        if (feasible[a] != feasible[b]) return feasible[a] > feasible[b];
        return fit[a] > fit[b];
      });
      for (std::size_t e = 0; e < elites && e < P; ++e) next.push_back(pop[ranked[e]]);
      pool = sa_select(fit, feasible, P, T, cfg.bottom_fraction, rng);
    } else {
      pool = roulette_select(fit, P, rng);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; next.size() < P; k += 2) {
      const std::size_t ia = pool[k % pool.size()], ib = pool[(k + 1) % pool.size()];
      Genome a = pop[ia], b = pop[ib];
      if (u(rng) < cfg.crossover_rate) {
        const bool below = variant == Variant::kRoulette || (fit[ia] < mean && fit[ib] < mean);
        std::tie(a, b) = crossover(pop[ia], pop[ib], below, rng, lim);
      }
      const bool below_a = variant == Variant::kAnnealed && fit[ia] < mean;
      const bool below_b = variant == Variant::kAnnealed && fit[ib] < mean;
      mutate(a, below_a, cfg.mutation_rate, rng, lim);
      mutate(b, below_b, cfg.mutation_rate, rng, lim);
      next.push_back(std::move(a));
      if (next.size() < P) next.push_back(std::move(b));
    }
    pop = std::move(next);
  }
  return best;
}

}  // namespace detail

inline OptimizationResult optimize_schedule(const ConflictModel& model, const SoaConfig& cfg) {
  return detail::run_ga(model, cfg, detail::Variant::kAnnealed);
}

inline OptimizationResult run_baseline_ga(const ConflictModel& model, const SoaConfig& cfg) {
  return detail::run_ga(model, cfg, detail::Variant::kRoulette);
}

}  // namespace uam
