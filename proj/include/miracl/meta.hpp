// MIRACL meta-training: hierarchical composite learning over K scalarised
// subproblems of one sampled task per iteration, first-order meta-updates,
// archive-guided weight generation with the PSA diversity mechanism, the
// Meta-MORL ablation mode (independent task/weight pairs, no archive), and
// the meta-gradient variance diagnostic.
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>

#include "miracl/parallel.hpp"
#include "miracl/policy.hpp"
#include "miracl/scalarize.hpp"

namespace miracl {

enum class MetaMode { Miracl, MetaMorl };

inline std::string to_string(MetaMode m) { return m == MetaMode::Miracl ? "miracl" : "meta-morl"; }

inline MetaMode meta_mode_from_string(const std::string& s) {
  if (s == "miracl") return MetaMode::Miracl;
  if (s == "meta-morl") return MetaMode::MetaMorl;
  throw std::invalid_argument("unknown meta mode '" + s + "' (expected miracl|meta-morl)");
}

/// Inner-update PPO settings used during meta-training. The inner step is
/// a plain gradient step of size alpha, run for `epochs` minibatch epochs
/// over each adaptation batch.
inline PpoHyper meta_inner_ppo_defaults() {
  PpoHyper h;
  h.minibatch_size = 32;
  h.epochs = 10;
  h.gamma = 0.99;
  h.gae_lambda = 1.0;
  h.clip_range = 0.3;
  h.ent_coef = 0.0;
  h.vf_coef = 0.5;
  h.max_grad_norm = 0.5;
  h.kl_target = 0.01;
  h.kl_coef = 0.001;
  h.use_adam = false;
  return h;
}

struct MetaConfig {
  MetaMode mode = MetaMode::Miracl;
  int subproblems = 10;          // K
  double inner_lr = 0.003;       // alpha
  double outer_lr = 0.001;       // beta
  int inner_steps = 4;           // 4 simple / 8 moderate & complex
  long long step_budget = 1'000'000;
  long long max_iterations = 0;  // 0: run until the step budget is spent
  PsaConfig psa;
  PpoHyper ppo = meta_inner_ppo_defaults();
  int rollout_episodes = 1;      // episodes collected per inner update
  int workers = 1;
  double outer_max_grad_norm = 0.5;
  int hidden1 = 64, hidden2 = 64;
  int checkpoint_every = 50;
  std::string checkpoint_dir;    // empty: no checkpoints written
  // Test hook: make Meta-MORL share one task across its K pairs, so that
  // with PSA disabled the two modes are update-for-update identical.
  bool metamorl_shared_task = false;
  // Diagnostics only: roll out with the clipped action mean instead of
  // Gaussian samples (the deterministic-policy limit).
  bool deterministic_rollouts = false;
};

template <typename S>
concept TaskSampler = requires(const S& s, std::uint64_t seed) {
  { s.sample(seed) };
  { s.obs_dim() } -> std::convertible_to<int>;
  { s.act_dim() } -> std::convertible_to<int>;
  { s.objective_dim() } -> std::convertible_to<int>;
};

/// K fresh weights for the next meta-iteration. With an empty archive (or
/// a zero PSA rate) these are plain Dirichlet(1,..,1) samples; otherwise
/// each base sample takes one PSA step against the archive entry nearest
/// to it (its stored reward as r, that entry's nearest distinct archive
/// neighbour as r'), pushing new subproblems away from well-covered
/// regions of objective space.
inline std::vector<Vec> generate_weights(const ParetoArchive& archive, int k, int d, double psa_rate,
                                         RngStream& rng) {
  std::vector<Vec> weights = sample_simplex_weights(k, d, rng);
  if (archive.empty() || psa_rate == 0.0 || archive.size() < 2) return weights;
  for (Vec& w : weights) {
    const std::size_t ni = archive.nearest(w);
    const Vec& r = archive.entries()[ni].point;
    std::size_t best = ni;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < archive.size(); ++i) {
      if (i == ni) continue;
      const double d2 = squared_distance(archive.entries()[i].point, r);
      if (d2 < best_d) {
        best_d = d2;
        best = i;
      }
    }
    w = psa_update_step(w, r, archive.entries()[best].point, psa_rate);
  }
  return weights;
}

struct InnerAdaptResult {
  Vec adapted_params;
  RolloutResult post_rollout;  // collected under the adapted parameters
  long long env_steps = 0;
};

/// Inner adaptation: n_steps cycles of (rollout under the current
/// parameters, one PPO update with step size alpha), then a final rollout
/// under the adapted parameters for the outer loss and reward evaluation.
template <MoTask T>
InnerAdaptResult inner_adapt(const T& task, const PolicyShape& shape, Vec params,
                             std::span<const double> weight, double alpha, int n_steps,
                             PpoHyper ppo, int rollout_episodes, std::uint64_t seed,
                             bool deterministic_rollouts = false) {
  ppo.learning_rate = alpha;
  ppo.use_adam = false;
  InnerAdaptResult out;
  for (int i = 0; i < n_steps; ++i) {
    RolloutResult roll = scalarized_rollout(task, shape, params, weight, rollout_episodes,
                                            derive_seed(seed, {0xada0ull, static_cast<std::uint64_t>(i)}),
                                            deterministic_rollouts);
    out.env_steps += roll.env_steps;
    RngStream update_rng(derive_seed(seed, {0xada1ull, static_cast<std::uint64_t>(i)}));
    ppo_update(shape, params, roll.batch, ppo, update_rng);
  }
  out.post_rollout = scalarized_rollout(task, shape, params, weight, rollout_episodes,
                                        derive_seed(seed, {0xada2ull}), deterministic_rollouts);
  out.env_steps += out.post_rollout.env_steps;
  out.adapted_params = std::move(params);
  return out;
}

/// First-order meta-gradient contribution: the composite PPO loss gradient
/// evaluated at the adapted parameters on their post-adaptation rollout.
inline Vec outer_gradient(const PolicyShape& shape, std::span<const double> adapted_params,
                          const RolloutResult& post_rollout, const PpoHyper& ppo) {
  GaeResult g = gae(post_rollout.batch.reward, post_rollout.batch.value, post_rollout.batch.done,
                    0.0, ppo.gamma, ppo.gae_lambda);
  normalize_advantages(g.advantages);
  std::vector<int> idx(static_cast<std::size_t>(post_rollout.batch.n));
  for (int i = 0; i < post_rollout.batch.n; ++i) idx[i] = i;
  return ppo_loss_grad(shape, adapted_params, post_rollout.batch, g.advantages, g.returns, ppo, idx)
      .grad;
}

/// Averages the per-subproblem gradients, clips the global norm, and takes
/// one outer step. A non-finite average skips the update.
inline bool meta_update(Vec& params, const std::vector<Vec>& grads, double beta, double max_norm) {
  if (grads.empty()) throw std::invalid_argument("meta_update: no gradients");
  Vec avg(params.size(), 0.0);
  for (const Vec& g : grads) {
    if (g.size() != params.size()) throw std::invalid_argument("meta_update: gradient size mismatch");
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += g[i];
  }
  for (double& x : avg) x /= static_cast<double>(grads.size());
  if (!all_finite(avg)) return false;
  clip_global_norm(avg, max_norm);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= beta * avg[i];
  return true;
}

struct MetaLogRow {
  long long iteration = 0;
  long long env_steps = 0;
  double mean_scalarized_return = 0.0;
  std::size_t archive_size = 0;
  double wall_seconds = 0.0;
};

struct MetaTrainResult {
  PolicyShape shape;
  Vec params;
  ParetoArchive archive;
  std::vector<MetaLogRow> log;
  long long env_steps = 0;
  long long iterations = 0;
};

inline std::string meta_log_csv(const std::vector<MetaLogRow>& log) {
  std::ostringstream out;
  out << "iteration,env_steps,mean_scalarized_return,archive_size,wall_seconds\n";
  for (const auto& r : log)
    out << r.iteration << "," << r.env_steps << "," << format_double(r.mean_scalarized_return) << ","
        << r.archive_size << "," << format_double(r.wall_seconds) << "\n";
  return out.str();
}

/// Meta-training loop (Miracl or Meta-MORL mode). Budget counts training
/// rollout steps only; task-building calibration rollouts are excluded.
/// Deterministic for a fixed seed at any worker count: every subproblem
/// derives its own RNG streams and results merge in subproblem order.
template <TaskSampler S>
MetaTrainResult meta_train(const S& sampler, const MetaConfig& cfg, std::uint64_t seed,
                           const std::function<void(const MetaLogRow&)>& on_iteration = nullptr) {
  if (cfg.subproblems < 1) throw std::invalid_argument("meta_train: need K >= 1");
  const int k_count = cfg.subproblems;
  const int d = sampler.objective_dim();
  const auto t_start = std::chrono::steady_clock::now();

  MetaTrainResult res;
  res.shape = PolicyShape{sampler.obs_dim(), sampler.act_dim(), cfg.hidden1, cfg.hidden2};
  RngStream init_rng(derive_seed(seed, Stream::PolicyInit));
  res.params = init_params(res.shape, init_rng);
  RngStream weight_rng(derive_seed(seed, Stream::Weights));

  using Task = decltype(sampler.sample(std::uint64_t{}));
  const bool single_task = cfg.mode == MetaMode::Miracl || cfg.metamorl_shared_task;

  while (res.env_steps < cfg.step_budget &&
         (cfg.max_iterations == 0 || res.iterations < cfg.max_iterations)) {
    const std::uint64_t iter = static_cast<std::uint64_t>(res.iterations);

    std::vector<Task> tasks;
    std::vector<std::uint64_t> task_ids;
    if (single_task) {
      const std::uint64_t ts = derive_seed(seed, Stream::Task, iter);
      tasks.push_back(sampler.sample(ts));
      task_ids.push_back(ts);
    } else {
      for (int k = 0; k < k_count; ++k) {
        const std::uint64_t ts = derive_seed(seed, Stream::Task, iter, static_cast<std::uint64_t>(k));
        tasks.push_back(sampler.sample(ts));
        task_ids.push_back(ts);
      }
    }

    std::vector<Vec> weights =
        cfg.mode == MetaMode::Miracl
            ? generate_weights(res.archive, k_count, d, cfg.psa.rate, weight_rng)
            : sample_simplex_weights(k_count, d, weight_rng);

    std::vector<InnerAdaptResult> adapted(static_cast<std::size_t>(k_count));
    std::vector<Vec> grads(static_cast<std::size_t>(k_count));
    parallel_for(k_count, cfg.workers, [&](int k) {
      const Task& task = tasks[single_task ? 0 : k];
      adapted[k] = inner_adapt(task, res.shape, res.params, weights[k], cfg.inner_lr,
                               cfg.inner_steps, cfg.ppo, cfg.rollout_episodes,
                               derive_seed(seed, Stream::Rollout, iter, static_cast<std::uint64_t>(k)));
      grads[k] = outer_gradient(res.shape, adapted[k].adapted_params, adapted[k].post_rollout, cfg.ppo);
    });

    double mean_return = 0.0;
    for (const auto& a : adapted) {
      res.env_steps += a.env_steps;
      for (const auto& ep : a.post_rollout.episodes)
        mean_return += ep.scalarized_return / static_cast<double>(a.post_rollout.episodes.size());
    }
    mean_return /= static_cast<double>(k_count);

    meta_update(res.params, grads, cfg.outer_lr, cfg.outer_max_grad_norm);
    // Outer steps honour the same log-std projection as inner updates.
    for (int j = 0; j < res.shape.act; ++j)
      res.params[res.shape.log_std() + j] =
          std::clamp(res.params[res.shape.log_std() + j], cfg.ppo.log_std_min, cfg.ppo.log_std_max);

    if (cfg.mode == MetaMode::Miracl) {
      std::vector<ArchiveEntry> rewards(static_cast<std::size_t>(k_count));
      for (int k = 0; k < k_count; ++k) {
        const Task& task = tasks[single_task ? 0 : k];
        const Vec oriented = adapted[k].post_rollout.mean_oriented_total();
        rewards[k] = ArchiveEntry{normalize(oriented, task.bounds()),
                                  adapted[k].post_rollout.mean_raw_total(),
                                  task_ids[single_task ? 0 : k], weights[k], k};
      }
      diversity_mechanism(weights, rewards, res.archive, cfg.psa.steps, cfg.psa.rate);
    }

    ++res.iterations;
    MetaLogRow row{res.iterations, res.env_steps, mean_return, res.archive.size(),
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()};
    res.log.push_back(row);
    if (on_iteration) on_iteration(row);

    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        res.iterations % cfg.checkpoint_every == 0) {
      namespace fs = std::filesystem;
      fs::create_directories(cfg.checkpoint_dir);
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06lld.params", res.iterations);
      save_params((fs::path(cfg.checkpoint_dir) / name).string(), res.shape, res.params);
      write_text_file((fs::path(cfg.checkpoint_dir) / "archive.csv").string(), res.archive.to_csv());
      write_text_file((fs::path(cfg.checkpoint_dir) / "train_log.csv").string(), meta_log_csv(res.log));
    }
  }
  return res;
}

// ---- Meta-gradient variance diagnostic ----

struct VarianceReport {
  double miracl_total = 0.0;        // trace covariance of the K-weight estimator
  double miracl_within_task = 0.0;  // preference-induced component, E_T[tr Var(G_hat | T)]
  double miracl_task_induced = 0.0; // total minus within (noisy, may dip below zero)
  double meta_total = 0.0;          // trace covariance of the B-pair estimator
  int k = 0, b = 0, repeats = 0;
};

namespace detail {

template <TaskSampler S>
Vec metagrad_contribution(const S&, const PolicyShape& shape, std::span<const double> theta,
                          const MetaConfig& cfg, const auto& task, std::span<const double> w,
                          std::uint64_t seed) {
  InnerAdaptResult a = inner_adapt(task, shape, Vec(theta.begin(), theta.end()), w, cfg.inner_lr,
                                   cfg.inner_steps, cfg.ppo, cfg.rollout_episodes, seed,
                                   cfg.deterministic_rollouts);
  return outer_gradient(shape, a.adapted_params, a.post_rollout, cfg.ppo);
}

}  // namespace detail

/// Resampling estimate of the trace-of-covariance of the two meta-gradient
/// estimators at a fixed checkpoint: Miracl (one task, K weights) and
/// Meta-MORL (B independent task/weight pairs). The within-task component
/// uses paired conditional resampling: for X, X' i.i.d. given the task,
/// E[ 0.5 * ||X - X'||^2 ] equals the trace of Var(X | task).
template <TaskSampler S>
VarianceReport estimate_metagrad_variance(const S& sampler, const PolicyShape& shape,
                                          std::span<const double> theta, const MetaConfig& cfg,
                                          int k_weights, int b_pairs, int n_repeats,
                                          std::uint64_t seed) {
  if (n_repeats < 2) throw std::invalid_argument("estimate_metagrad_variance: need n_repeats >= 2");
  VarianceReport rep;
  rep.k = k_weights;
  rep.b = b_pairs;
  rep.repeats = n_repeats;
  const int d = sampler.objective_dim();

  auto estimator_miracl = [&](std::uint64_t s) {
    const auto task = sampler.sample(derive_seed(s, {1}));
    RngStream wrng(derive_seed(s, {2}));
    const auto weights = sample_simplex_weights(k_weights, d, wrng);
    Vec g(theta.size(), 0.0);
    for (int k = 0; k < k_weights; ++k) {
      const Vec gk = detail::metagrad_contribution(sampler, shape, theta, cfg, task, weights[k],
                                                   derive_seed(s, {3, static_cast<std::uint64_t>(k)}));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gk[i] / k_weights;
    }
    return g;
  };

  auto trace_variance = [](const std::vector<Vec>& samples) {
    const std::size_t n = samples.size(), dim = samples[0].size();
    double total = 0.0;
    for (std::size_t p = 0; p < dim; ++p) {
      double mean = 0.0;
      for (const Vec& s : samples) mean += s[p];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const Vec& s : samples) var += (s[p] - mean) * (s[p] - mean);
      total += var / static_cast<double>(n - 1);
    }
    return total;
  };

  std::vector<Vec> totals(static_cast<std::size_t>(n_repeats));
  for (int r = 0; r < n_repeats; ++r)
    totals[r] = estimator_miracl(derive_seed(seed, {0x101ull, static_cast<std::uint64_t>(r)}));
  rep.miracl_total = trace_variance(totals);

  // Conditional resampling: per task, several independent estimator
  // realisations (fresh weights and rollouts); their unbiased sample
  // covariance trace estimates tr Var(G_hat | T), averaged over tasks.
  const int conditional_draws = 4;
  double within = 0.0;
  for (int r = 0; r < n_repeats; ++r) {
    const std::uint64_t rs = derive_seed(seed, {0x202ull, static_cast<std::uint64_t>(r)});
    const auto task = sampler.sample(derive_seed(rs, {1}));
    std::vector<Vec> draws(conditional_draws);
    for (int m = 0; m < conditional_draws; ++m) {
      RngStream wrng(derive_seed(rs, {4, static_cast<std::uint64_t>(m)}));
      const auto weights = sample_simplex_weights(k_weights, d, wrng);
      Vec g(theta.size(), 0.0);
      for (int k = 0; k < k_weights; ++k) {
        const Vec gk = detail::metagrad_contribution(
            sampler, shape, theta, cfg, task, weights[k],
            derive_seed(rs, {5, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)}));
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gk[i] / k_weights;
      }
      draws[m] = std::move(g);
    }
    within += trace_variance(draws);
  }
  rep.miracl_within_task = within / static_cast<double>(n_repeats);
  rep.miracl_task_induced = rep.miracl_total - rep.miracl_within_task;

  std::vector<Vec> metas(static_cast<std::size_t>(n_repeats));
  for (int r = 0; r < n_repeats; ++r) {
    const std::uint64_t rs = derive_seed(seed, {0x303ull, static_cast<std::uint64_t>(r)});
    Vec g(theta.size(), 0.0);
    for (int i = 0; i < b_pairs; ++i) {
      const auto task = sampler.sample(derive_seed(rs, {6, static_cast<std::uint64_t>(i)}));
      RngStream wrng(derive_seed(rs, {7, static_cast<std::uint64_t>(i)}));
      const auto weights = sample_simplex_weights(1, d, wrng);
      const Vec gk = detail::metagrad_contribution(sampler, shape, theta, cfg, task, weights[0],
                                                   derive_seed(rs, {8, static_cast<std::uint64_t>(i)}));
      for (std::size_t p = 0; p < g.size(); ++p) g[p] += gk[p] / b_pairs;
    }
    metas[r] = std::move(g);
  }
  rep.meta_total = trace_variance(metas);
  return rep;
}

}  // namespace miracl
