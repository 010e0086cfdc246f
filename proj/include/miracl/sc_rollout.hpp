// Adapts an ScTask (plus its normalisation bounds) to the generic
// multi-objective task interface used by rollouts, training and NSGA-II.
#pragma once

#include "miracl/metrics.hpp"
#include "miracl/policy.hpp"
#include "miracl/supply_chain.hpp"
#include "miracl/task_library.hpp"

namespace miracl {

class ScRolloutTask {
 public:
  using State = ScState;

  ScRolloutTask(ScTask task, ObjectiveBounds bounds)
      : task_(std::move(task)), bounds_(std::move(bounds)) {
    bounds_.validate();
  }

  int obs_dim() const { return task_.obs_dim(); }
  int act_dim() const { return task_.action_dim(); }
  int objective_dim() const { return 3; }
  int horizon() const { return task_.horizon; }

  State reset(std::uint64_t episode_seed) const { return miracl::reset(task_, episode_seed); }

  Vec step(State& state, std::span<const double> unit_action) const {
    const ActionVector a = ActionVector::from_unit(task_, unit_action);
    StepResult r = miracl::step(task_, state, a);
    state = std::move(r.state);
    return {r.objectives.profit, r.objectives.emission, r.objectives.inequality};
  }

  void observe(const State& state, std::span<double> out) const {
    miracl::observe(task_, state, out);
  }

  Vec orient(std::span<const double> raw) const { return {raw[0], -raw[1], -raw[2]}; }

  const ObjectiveBounds& bounds() const { return bounds_; }
  const ScTask& task() const { return task_; }

 private:
  ScTask task_;
  ObjectiveBounds bounds_;
};

static_assert(MoTask<ScRolloutTask>);

/// Builds a (possibly perturbed) canonical task together with its
/// random-rollout normalisation bounds.
inline ScRolloutTask make_sc_rollout_task(Complexity c, bool perturb, std::uint64_t seed,
                                          int bounds_episodes = 100, const BuildOptions& opt = {}) {
  ScTask t = build_task(c, perturb, seed, opt);
  ObjectiveBounds b = fit_bounds(t, bounds_episodes, derive_seed(seed, Stream::Bounds));
  return {std::move(t), std::move(b)};
}

/// Task-distribution sampler for meta-training: perturbed instances of one
/// complexity, each with its own rollout-calibrated bounds.
class ScTaskSampler {
 public:
  ScTaskSampler(Complexity c, int bounds_episodes = 100, BuildOptions opt = {})
      : complexity_(c), bounds_episodes_(bounds_episodes), opt_(opt) {
    const ScTask probe = detail::canonical(c, opt_);
    obs_dim_ = probe.obs_dim();
    act_dim_ = probe.action_dim();
  }

  ScRolloutTask sample(std::uint64_t seed) const {
    return make_sc_rollout_task(complexity_, /*perturb=*/true, seed, bounds_episodes_, opt_);
  }

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int objective_dim() const { return 3; }

 private:
  Complexity complexity_;
  int bounds_episodes_;
  BuildOptions opt_;
  int obs_dim_ = 0, act_dim_ = 0;
};

}  // namespace miracl
