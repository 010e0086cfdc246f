// NSGA-II baseline over open-loop action plans: a genome holds one unit
// action per period, evaluated by replaying the plan through the
// simulator (with its feasibility rationing) over a fixed set of
// evaluation episodes shared by all genomes, so fitness is deterministic
// per run and elitist archive hypervolume cannot regress.
#pragma once

#include "miracl/metrics.hpp"
#include "miracl/parallel.hpp"
#include "miracl/policy.hpp"
#include "miracl/rng.hpp"

namespace miracl {

struct Nsga2Config {
  int population = 300;
  int offspring = 30;
  double crossover_prob = 0.9;
  double crossover_eta = 15.0;
  double mutation_eta = 20.0;
  double mutation_prob = -1.0;  // negative: 1 / genome length
  int generations = 100;
  int eval_episodes = 3;
  int workers = 1;
};

/// Simulated binary crossover in [0,1]^n. Gene exchange happens with
/// probability 1/2 per gene once the pair recombines at all; children are
/// clipped to the unit box and always average to the parents' midpoint
/// before clipping.
inline std::pair<Vec, Vec> sbx_crossover(std::span<const double> p1, std::span<const double> p2,
                                         double eta, double prob, RngStream& rng) {
  if (p1.size() != p2.size()) throw std::invalid_argument("sbx_crossover: length mismatch");
  Vec c1(p1.begin(), p1.end()), c2(p2.begin(), p2.end());
  if (rng.uniform() > prob) return {std::move(c1), std::move(c2)};
  for (std::size_t i = 0; i < c1.size(); ++i) {
    if (rng.uniform() > 0.5) continue;
    if (std::abs(p1[i] - p2[i]) < 1e-14) continue;
    const double u = rng.uniform();
    const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                                 : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
    const double a = 0.5 * ((1.0 + beta) * p1[i] + (1.0 - beta) * p2[i]);
    const double b = 0.5 * ((1.0 - beta) * p1[i] + (1.0 + beta) * p2[i]);
    c1[i] = clamp01(a);
    c2[i] = clamp01(b);
  }
  return {std::move(c1), std::move(c2)};
}

/// Polynomial mutation with distribution index eta; per-gene probability.
inline Vec polynomial_mutation(std::span<const double> g, double eta, double prob, RngStream& rng) {
  Vec out(g.begin(), g.end());
  for (double& x : out) {
    if (rng.uniform() >= prob) continue;
    const double u = rng.uniform();
    const double delta = u < 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0)) - 1.0
                                 : 1.0 - std::pow(2.0 * (1.0 - u), 1.0 / (eta + 1.0));
    x = clamp01(x + delta);
  }
  return out;
}

/// Deb's fast non-dominated sort; returns fronts of indices, best first.
inline std::vector<std::vector<int>> fast_non_dominated_sort(const std::vector<Vec>& points) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> dominated_by(static_cast<std::size_t>(n));
  std::vector<int> domination_count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> fronts(1);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) dominated_by[p].push_back(q);
      else if (dominates(points[q], points[p])) ++domination_count[p];
    }
    if (domination_count[p] == 0) fronts[0].push_back(p);
  }
  std::size_t f = 0;
  while (!fronts[f].empty()) {
    std::vector<int> next;
    for (int p : fronts[f])
      for (int q : dominated_by[p])
        if (--domination_count[q] == 0) next.push_back(q);
    fronts.push_back(std::move(next));
    ++f;
  }
  fronts.pop_back();
  return fronts;
}

/// Crowding distance within one front; boundary points get infinity.
inline Vec crowding_distance(const std::vector<Vec>& points, const std::vector<int>& front) {
  Vec dist(points.size(), 0.0);
  if (front.empty()) return dist;
  const std::size_t d = points[front[0]].size();
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<int> order = front;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return points[a][j] < points[b][j]; });
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    const double span = points[order.back()][j] - points[order.front()][j];
    if (span <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < order.size(); ++i)
      dist[order[i]] += (points[order[i + 1]][j] - points[order[i - 1]][j]) / span;
  }
  return dist;
}

struct Nsga2GenerationLog {
  int generation = 0;
  double archive_hv = 0.0;     // accumulated elitist archive
  double population_hv = 0.0;  // first front of the current population
};

struct Nsga2Result {
  std::vector<ArchiveEntry> front;  // first front of the final population
  std::vector<ArchiveEntry> archive_front;  // non-dominated set over every evaluation
  std::vector<Nsga2GenerationLog> hv_log;
  long long env_steps = 0;
};

template <MoTask T>
Nsga2Result run_nsga2(const T& task, const Nsga2Config& cfg, std::uint64_t seed) {
  if (cfg.population < 2) throw std::invalid_argument("run_nsga2: population must be >= 2");
  const int genome_len = task.horizon() * task.act_dim();
  const double mut_prob =
      cfg.mutation_prob >= 0.0 ? cfg.mutation_prob : 1.0 / static_cast<double>(genome_len);
  const int d = task.objective_dim();

  // Shared evaluation episodes: common random numbers across all genomes.
  std::vector<std::uint64_t> eval_seeds(static_cast<std::size_t>(cfg.eval_episodes));
  for (int e = 0; e < cfg.eval_episodes; ++e)
    eval_seeds[e] = derive_seed(seed, Stream::Eval, static_cast<std::uint64_t>(e));

  Nsga2Result res;
  auto evaluate = [&](const Vec& genome) {
    Vec oriented_mean(static_cast<std::size_t>(d), 0.0);
    Vec raw_mean(static_cast<std::size_t>(d), 0.0);
    for (std::uint64_t es : eval_seeds) {
      auto state = task.reset(es);
      Vec raw_total(static_cast<std::size_t>(d), 0.0);
      for (int t = 0; t < task.horizon(); ++t) {
        const std::span<const double> a(&genome[static_cast<std::size_t>(t) * task.act_dim()],
                                        task.act_dim());
        const Vec r = task.step(state, a);
        for (int j = 0; j < d; ++j) raw_total[j] += r[j];
      }
      const Vec oriented = task.orient(raw_total);
      for (int j = 0; j < d; ++j) {
        oriented_mean[j] += oriented[j] / cfg.eval_episodes;
        raw_mean[j] += raw_total[j] / cfg.eval_episodes;
      }
      res.env_steps += task.horizon();
    }
    return std::pair<Vec, Vec>(oriented_mean, raw_mean);
  };

  RngStream rng(derive_seed(seed, Stream::Nsga2));
  std::vector<Vec> genomes(static_cast<std::size_t>(cfg.population));
  for (Vec& g : genomes) {
    g.resize(static_cast<std::size_t>(genome_len));
    for (double& x : g) x = rng.uniform();
  }

  std::vector<Vec> fitness(genomes.size());    // oriented episode-total means
  std::vector<Vec> raw_fitness(genomes.size());
  ParetoArchive archive;
  int next_id = 0;
  std::vector<int> ids(genomes.size());
  auto account = [&](const Vec& oriented, const Vec& raw, int id) {
    archive.insert(ArchiveEntry{normalize(oriented, task.bounds()),
                                Vec{raw.begin(), raw.end()}, seed, {}, id});
  };
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    auto [oriented, raw] = evaluate(genomes[i]);
    fitness[i] = std::move(oriented);
    raw_fitness[i] = std::move(raw);
    ids[i] = next_id++;
    account(fitness[i], raw_fitness[i], ids[i]);
  }

  const Vec hv_ref(static_cast<std::size_t>(d), 0.0);
  auto log_generation = [&](int gen) {
    Nsga2GenerationLog row;
    row.generation = gen;
    row.archive_hv = d == 3 ? hypervolume(archive.points(), hv_ref) : 0.0;
    std::vector<Vec> norm_pop;
    norm_pop.reserve(fitness.size());
    for (const Vec& f : fitness) norm_pop.push_back(normalize(f, task.bounds()));
    row.population_hv = d == 3 ? hypervolume(non_dominated_filter(norm_pop), hv_ref) : 0.0;
    res.hv_log.push_back(row);
  };

  auto fronts = fast_non_dominated_sort(fitness);
  Vec crowd(genomes.size(), 0.0);
  auto recompute_crowding = [&]() {
    crowd.assign(genomes.size(), 0.0);
    for (const auto& front : fronts) {
      const Vec cd = crowding_distance(fitness, front);
      for (int i : front) crowd[i] = cd[i];
    }
  };
  std::vector<int> rank(genomes.size(), 0);
  auto recompute_rank = [&]() {
    rank.assign(genomes.size(), 0);
    for (std::size_t f = 0; f < fronts.size(); ++f)
      for (int i : fronts[f]) rank[i] = static_cast<int>(f);
  };
  recompute_rank();
  recompute_crowding();
  log_generation(0);

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    auto tournament = [&]() {
      const int a = static_cast<int>(rng.uniform_int(0, cfg.population - 1));
      const int b = static_cast<int>(rng.uniform_int(0, cfg.population - 1));
      if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
      return crowd[a] >= crowd[b] ? a : b;
    };

    std::vector<Vec> children;
    while (static_cast<int>(children.size()) < cfg.offspring) {
      auto [c1, c2] = sbx_crossover(genomes[tournament()], genomes[tournament()],
                                    cfg.crossover_eta, cfg.crossover_prob, rng);
      children.push_back(polynomial_mutation(c1, cfg.mutation_eta, mut_prob, rng));
      if (static_cast<int>(children.size()) < cfg.offspring)
        children.push_back(polynomial_mutation(c2, cfg.mutation_eta, mut_prob, rng));
    }

    for (Vec& c : children) {
      auto [oriented, raw] = evaluate(c);
      genomes.push_back(std::move(c));
      fitness.push_back(std::move(oriented));
      raw_fitness.push_back(std::move(raw));
      ids.push_back(next_id++);
      account(fitness.back(), raw_fitness.back(), ids.back());
    }

    // (mu + lambda) survivor selection by rank, then crowding.
    fronts = fast_non_dominated_sort(fitness);
    recompute_rank();
    recompute_crowding();
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(cfg.population));
    for (const auto& front : fronts) {
      if (static_cast<int>(keep.size() + front.size()) <= cfg.population) {
        keep.insert(keep.end(), front.begin(), front.end());
      } else {
        std::vector<int> sorted = front;
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
          return crowd[a] > crowd[b] || (crowd[a] == crowd[b] && a < b);
        });
        for (int i : sorted) {
          if (static_cast<int>(keep.size()) == cfg.population) break;
          keep.push_back(i);
        }
      }
      if (static_cast<int>(keep.size()) == cfg.population) break;
    }
    std::vector<Vec> new_genomes, new_fitness, new_raw;
    std::vector<int> new_ids;
    for (int i : keep) {
      new_genomes.push_back(std::move(genomes[i]));
      new_fitness.push_back(std::move(fitness[i]));
      new_raw.push_back(std::move(raw_fitness[i]));
      new_ids.push_back(ids[i]);
    }
    genomes = std::move(new_genomes);
    fitness = std::move(new_fitness);
    raw_fitness = std::move(new_raw);
    ids = std::move(new_ids);
    fronts = fast_non_dominated_sort(fitness);
    recompute_rank();
    recompute_crowding();
    log_generation(gen);
  }

  std::vector<ArchiveEntry> final_front;
  for (int i : fronts[0]) {
    ArchiveEntry e{normalize(fitness[i], task.bounds()), raw_fitness[i], seed, {}, ids[i]};
    bool duplicate = false;
    for (const auto& kept : final_front) duplicate = duplicate || kept.point == e.point;
    if (!duplicate) final_front.push_back(std::move(e));
  }
  res.front = std::move(final_front);
  res.archive_front = archive.entries();
  return res;
}

}  // namespace miracl
