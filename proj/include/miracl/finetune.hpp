// Few-shot fine-tuning of a meta-policy on one unseen task: K weighted
// copies trained independently, one PSA diversity pass on the evaluated
// rewards, a short weight-refined second stage, and non-dominated
// filtering of the final evaluations into a Pareto-front approximation.
#pragma once

#include "miracl/parallel.hpp"
#include "miracl/policy.hpp"
#include "miracl/scalarize.hpp"

namespace miracl {

/// Fine-tuning PPO settings (standard-PPO defaults; Adam optimiser).
inline PpoHyper finetune_ppo_defaults() {
  PpoHyper h;
  h.learning_rate = 3e-4;
  h.steps_per_update = 2048;
  h.minibatch_size = 64;
  h.epochs = 10;
  h.gamma = 0.99;
  h.gae_lambda = 0.95;
  h.clip_range = 0.2;
  h.ent_coef = 0.0;
  h.vf_coef = 0.5;
  h.max_grad_norm = 0.5;
  h.use_adam = true;
  return h;
}

struct FinetuneConfig {
  int solutions = 21;        // K
  long long steps = 5000;    // T env steps per subproblem
  long long steps_add = -1;  // T_add; negative: 0.2 * steps
  int eval_episodes = 5;
  PsaConfig psa;
  PpoHyper ppo = finetune_ppo_defaults();
  int workers = 1;

  long long resolved_steps_add() const {
    return steps_add >= 0 ? steps_add : static_cast<long long>(0.2 * static_cast<double>(steps));
  }
};

struct PolicyEvaluation {
  Vec raw;         // mean episode-total objectives, domain orientation
  Vec normalized;  // of the mean oriented totals
};

/// Deterministic evaluation with the clipped action mean: episode-total
/// objectives averaged over n seeded episodes.
template <MoTask T>
PolicyEvaluation evaluate_policy(const T& task, const PolicyShape& shape,
                                 std::span<const double> params, int n_episodes,
                                 std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate_policy: need n_episodes >= 1");
  const Vec uniform_w(static_cast<std::size_t>(task.objective_dim()),
                      1.0 / task.objective_dim());
  RolloutResult roll = scalarized_rollout(task, shape, params, uniform_w, n_episodes, seed,
                                          /*deterministic=*/true);
  PolicyEvaluation out;
  out.raw = roll.mean_raw_total();
  out.normalized = normalize(roll.mean_oriented_total(), task.bounds());
  return out;
}

struct FinetunedPolicy {
  Vec params;
  Vec weight;
  PolicyEvaluation evaluation;  // after the final stage
};

struct FinetuneResult {
  std::vector<FinetunedPolicy> policies;
  std::vector<ArchiveEntry> pareto_front;  // non-dominated final evaluations
  ParetoArchive archive;                   // local PSA archive
  long long env_steps = 0;
};

namespace detail {

/// Trains for at least `budget` env steps in whole-episode batches of
/// about `ppo.steps_per_update` steps each.
template <MoTask T>
long long train_steps(const T& task, const PolicyShape& shape, Vec& params,
                      std::span<const double> weight, long long budget, const PpoHyper& ppo,
                      AdamState& adam, double& kl_coef, std::uint64_t seed) {
  long long used = 0;
  int update = 0;
  const int horizon = task.horizon();
  const int episodes_per_update = std::max(1, (ppo.steps_per_update + horizon - 1) / horizon);
  while (used < budget) {
    const long long remaining = budget - used;
    const int episodes = static_cast<int>(std::min<long long>(
        episodes_per_update, (remaining + horizon - 1) / horizon));
    RolloutResult roll =
        scalarized_rollout(task, shape, params, weight, episodes,
                           derive_seed(seed, {0xf17ull, static_cast<std::uint64_t>(update)}));
    used += roll.env_steps;
    PpoHyper h = ppo;
    h.kl_coef = kl_coef;
    RngStream rng(derive_seed(seed, {0xf18ull, static_cast<std::uint64_t>(update)}));
    kl_coef = ppo_update(shape, params, roll.batch, h, rng, &adam).kl_coef;
    ++update;
  }
  return used;
}

}  // namespace detail

inline std::vector<ArchiveEntry> non_dominated_entries(const std::vector<ArchiveEntry>& entries) {
  std::vector<ArchiveEntry> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < entries.size() && keep; ++j)
      if (j != i && dominates(entries[j].point, entries[i].point)) keep = false;
    bool duplicate = false;
    for (const auto& e : out) duplicate = duplicate || e.point == entries[i].point;
    if (keep && !duplicate) out.push_back(entries[i]);
  }
  return out;
}

template <MoTask T>
FinetuneResult fine_tune(const T& task, const PolicyShape& shape, std::span<const double> theta_meta,
                         const FinetuneConfig& cfg, std::uint64_t seed, std::uint64_t task_id = 0) {
  if (shape.obs != task.obs_dim() || shape.act != task.act_dim())
    throw std::invalid_argument("fine_tune: policy shape does not match the task");
  const int k_count = cfg.solutions;
  FinetuneResult res;
  res.policies.resize(static_cast<std::size_t>(k_count));

  RngStream wrng(derive_seed(seed, Stream::Weights));
  std::vector<Vec> weights = sample_simplex_weights(k_count, task.objective_dim(), wrng);

  std::vector<AdamState> adam(static_cast<std::size_t>(k_count));
  std::vector<double> kl_coef(static_cast<std::size_t>(k_count), cfg.ppo.kl_coef);
  std::vector<long long> used(static_cast<std::size_t>(k_count), 0);
  std::vector<PolicyEvaluation> stage1(static_cast<std::size_t>(k_count));

  parallel_for(k_count, cfg.workers, [&](int k) {
    Vec params(theta_meta.begin(), theta_meta.end());
    used[k] = detail::train_steps(task, shape, params, weights[k], cfg.steps, cfg.ppo, adam[k],
                                  kl_coef[k], derive_seed(seed, Stream::Rollout, 1, k));
    stage1[k] = evaluate_policy(task, shape, params, cfg.eval_episodes,
                                derive_seed(seed, Stream::Eval, 1, k));
    res.policies[k].params = std::move(params);
  });

  std::vector<ArchiveEntry> rewards(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k)
    rewards[k] = ArchiveEntry{stage1[k].normalized, stage1[k].raw, task_id, weights[k], k};
  diversity_mechanism(weights, rewards, res.archive, cfg.psa.steps, cfg.psa.rate);

  const long long t_add = cfg.resolved_steps_add();
  parallel_for(k_count, cfg.workers, [&](int k) {
    if (t_add > 0)
      used[k] += detail::train_steps(task, shape, res.policies[k].params, weights[k], t_add, cfg.ppo,
                                     adam[k], kl_coef[k], derive_seed(seed, Stream::Rollout, 2, k));
    res.policies[k].evaluation =
        t_add > 0 ? evaluate_policy(task, shape, res.policies[k].params, cfg.eval_episodes,
                                    derive_seed(seed, Stream::Eval, 2, k))
                  : stage1[k];
    res.policies[k].weight = weights[k];
  });

  std::vector<ArchiveEntry> finals(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    finals[k] = ArchiveEntry{res.policies[k].evaluation.normalized, res.policies[k].evaluation.raw,
                             task_id, res.policies[k].weight, k};
    res.env_steps += used[k];
  }
  res.pareto_front = non_dominated_entries(finals);
  return res;
}

}  // namespace miracl
