#include <doctest.h>

#include "miracl/finetune.hpp"
#include "miracl/sc_rollout.hpp"
#include "support/micro_chain.hpp"

using namespace miracl;

namespace {

ScRolloutTask micro_task() {
  support::MicroChainParams p;
  p.price = 20.0;
  p.mfg_cost = 2.0;
  p.mfg_emission = 0.4;
  p.cost_sm = 0.3;
  p.emission_sm = 0.1;
  p.cost_mr = 0.5;
  p.emission_mr = 0.2;
  p.inv_cost_m = 0.1;
  p.inv_cost_r = 0.1;
  p.inv_emission_m = 0.01;
  p.init_inv_m = 60.0;
  p.demand_mean = 8.0;
  p.demand_sigma = 3.0;
  p.horizon = 6;
  const ScTask t = support::make_micro_chain(p);
  return {t, fit_bounds(t, 12, 5)};
}

FinetuneConfig tiny_config() {
  FinetuneConfig c;
  c.solutions = 4;
  c.steps = 0;
  c.steps_add = 0;
  c.eval_episodes = 2;
  c.ppo.steps_per_update = 12;
  c.ppo.minibatch_size = 12;
  c.ppo.epochs = 2;
  c.psa.steps = 3;
  c.psa.rate = 0.05;
  return c;
}

}  // namespace

TEST_CASE("evaluate_policy: determinism and single-episode identity") {
  const ScRolloutTask task = micro_task();
  const PolicyShape shape{task.obs_dim(), task.act_dim(), 8, 8};
  RngStream rng(2);
  const Vec params = init_params(shape, rng);

  const PolicyEvaluation a = evaluate_policy(task, shape, params, 3, 99);
  const PolicyEvaluation b = evaluate_policy(task, shape, params, 3, 99);
  CHECK(a.raw == b.raw);
  CHECK(a.normalized == b.normalized);

  const PolicyEvaluation single = evaluate_policy(task, shape, params, 1, 41);
  const Vec uniform_w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const RolloutResult roll = scalarized_rollout(task, shape, params, uniform_w, 1, 41, true);
  CHECK(single.raw == roll.episodes[0].raw_total);

  CHECK_THROWS_AS(evaluate_policy(task, shape, params, 0, 1), std::invalid_argument);
}

TEST_CASE("evaluate_policy matches the hand-computed full-throttle episode") {
  // Saturated policy (huge mean-head bias): every action hits its cap.
  support::MicroChainParams p;
  p.price = 20.0;
  p.mfg_cost = 2.0;
  p.mfg_emission = 0.5;
  p.cost_sm = 0.3;
  p.emission_sm = 0.1;
  p.cost_mr = 0.5;
  p.emission_mr = 0.2;
  p.inv_cost_m = 0.1;
  p.inv_cost_r = 0.2;
  p.inv_emission_m = 0.01;
  p.inv_emission_r = 0.02;
  p.init_inv_m = 100.0;
  p.demand_mean = 4.0;
  p.horizon = 3;
  p.transport_cap = 10.0;
  p.mfg_cap = 5.0;
  const ScTask t = support::make_micro_chain(p);
  const ScRolloutTask task(t, fit_bounds(t, 4, 9));

  const PolicyShape shape{task.obs_dim(), task.act_dim(), 8, 8};
  Vec params(static_cast<std::size_t>(shape.param_count()), 0.0);
  for (int i = 0; i < shape.act; ++i) params[shape.bm() + i] = 10.0;

  const PolicyEvaluation e = evaluate_policy(task, shape, params, 1, 123);
  CHECK(e.raw[0] == doctest::Approx(312.4).epsilon(1e-9));
  CHECK(e.raw[1] == doctest::Approx(19.86).epsilon(1e-9));
  CHECK(e.raw[2] == doctest::Approx(0.0));
}

TEST_CASE("fine_tune with zero budgets returns copies of the meta policy") {
  const ScRolloutTask task = micro_task();
  const PolicyShape shape{task.obs_dim(), task.act_dim(), 8, 8};
  RngStream rng(3);
  const Vec theta = init_params(shape, rng);

  const FinetuneResult r = fine_tune(task, shape, theta, tiny_config(), 17);
  REQUIRE(r.policies.size() == 4);
  for (const auto& p : r.policies) CHECK(p.params == theta);
  CHECK(r.pareto_front.size() >= 1);
  CHECK(r.env_steps == 0);

  // The front is exactly the non-dominated subset of the evaluations.
  std::vector<ArchiveEntry> evals;
  for (std::size_t k = 0; k < r.policies.size(); ++k)
    evals.push_back({r.policies[k].evaluation.normalized, r.policies[k].evaluation.raw, 0,
                     r.policies[k].weight, static_cast<int>(k)});
  CHECK(r.pareto_front.size() == non_dominated_entries(evals).size());
}

TEST_CASE("single-solution fine_tune yields that policy's point") {
  const ScRolloutTask task = micro_task();
  const PolicyShape shape{task.obs_dim(), task.act_dim(), 8, 8};
  RngStream rng(5);
  const Vec theta = init_params(shape, rng);
  FinetuneConfig cfg = tiny_config();
  cfg.solutions = 1;
  const FinetuneResult r = fine_tune(task, shape, theta, cfg, 21);
  REQUIRE(r.pareto_front.size() == 1);
  CHECK(r.pareto_front[0].point == r.policies[0].evaluation.normalized);
}

TEST_CASE("fine_tune trains, stays reproducible, and parallelises deterministically") {
  const ScRolloutTask task = micro_task();
  const PolicyShape shape{task.obs_dim(), task.act_dim(), 8, 8};
  RngStream rng(7);
  const Vec theta = init_params(shape, rng);

  FinetuneConfig cfg = tiny_config();
  cfg.solutions = 3;
  cfg.steps = 36;      // a couple of 12-step updates per stage
  cfg.steps_add = 12;
  const FinetuneResult a = fine_tune(task, shape, theta, cfg, 31);
  CHECK(a.env_steps >= 3 * (36 + 12));
  for (const auto& p : a.policies) CHECK(p.params != theta);

  const FinetuneResult b = fine_tune(task, shape, theta, cfg, 31);
  REQUIRE(a.policies.size() == b.policies.size());
  for (std::size_t k = 0; k < a.policies.size(); ++k) {
    CHECK(a.policies[k].params == b.policies[k].params);
    CHECK(a.policies[k].evaluation.raw == b.policies[k].evaluation.raw);
  }

  FinetuneConfig par = cfg;
  par.workers = 2;
  const FinetuneResult c = fine_tune(task, shape, theta, par, 31);
  for (std::size_t k = 0; k < a.policies.size(); ++k)
    CHECK(a.policies[k].params == c.policies[k].params);

  // The returned front is mutually non-dominated.
  for (std::size_t i = 0; i < a.pareto_front.size(); ++i)
    for (std::size_t j = 0; j < a.pareto_front.size(); ++j)
      if (i != j) CHECK_FALSE(dominates(a.pareto_front[i].point, a.pareto_front[j].point));
}

TEST_CASE("steps_add default is a fifth of the stage-one budget") {
  FinetuneConfig cfg;
  cfg.steps = 5000;
  CHECK(cfg.resolved_steps_add() == 1000);
  cfg.steps_add = 123;
  CHECK(cfg.resolved_steps_add() == 123);
}

TEST_CASE("shape mismatch is rejected") {
  const ScRolloutTask task = micro_task();
  const PolicyShape wrong{task.obs_dim() + 1, task.act_dim(), 8, 8};
  RngStream rng(9);
  const Vec theta = init_params(wrong, rng);
  CHECK_THROWS_AS(fine_tune(task, wrong, theta, tiny_config(), 1), std::invalid_argument);
}
