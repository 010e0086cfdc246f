// Batch experiment driver: strict JSON configuration, orchestration of
// meta-train / fine-tune / nsga2 / evaluate / diagnose-variance runs,
// artifact persistence with a checksummed manifest, metric reports, and
// operational trace export. Any run can be reproduced byte-for-byte from
// its manifest (the manifest embeds the full config echo).
#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <set>

#include "miracl/finetune.hpp"
#include "miracl/meta.hpp"
#include "miracl/nsga2.hpp"
#include "miracl/sc_rollout.hpp"

namespace miracl {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- Config schema ----

struct EnvConfig {
  std::string complexity = "simple";
  std::string task_file;    // overrides the canonical instance when set
  std::string bounds_path;  // shared normalisation bounds artifact
  int bounds_episodes = 100;
  int emission_scale_episodes = 100;
  double season_amplitude = 0.2;
};

struct EvaluateAlgorithm {
  std::string name;
  std::vector<std::string> pf_files;
};

struct EvaluateConfig {
  std::vector<EvaluateAlgorithm> algorithms;
  std::vector<std::pair<std::string, std::string>> pairs;
  int eum_weight_count = 100;
  std::uint64_t eum_weight_seed = 7;
};

struct VarianceConfig {
  int k = 10;
  int b = 10;
  int repeats = 10;
  std::string checkpoint;
};

struct ExperimentConfig {
  std::string mode;
  std::string out_dir = "runs/out";
  std::vector<std::uint64_t> seeds{1};
  EnvConfig env;
  PsaConfig psa;
  MetaConfig meta;
  int meta_task_bounds_episodes = 100;
  FinetuneConfig finetune;
  std::string finetune_meta_checkpoint;
  Nsga2Config nsga2;
  EvaluateConfig evaluate;
  VarianceConfig variance;
  json echo;  // the raw config this run was parsed from
};

namespace cfgdetail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw std::runtime_error("config: expected an object at " + path);
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key))
      throw std::runtime_error("config: unknown field '" + key + "' at " + path);
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

inline void parse_ppo(const json& j, PpoHyper& h, const std::string& path) {
  check_keys(j,
             {"learning_rate", "steps_per_update", "minibatch_size", "epochs", "gamma",
              "gae_lambda", "clip_range", "ent_coef", "vf_coef", "max_grad_norm", "kl_target",
              "kl_coef", "use_adam"},
             path);
  get_to(j, "learning_rate", h.learning_rate);
  get_to(j, "steps_per_update", h.steps_per_update);
  get_to(j, "minibatch_size", h.minibatch_size);
  get_to(j, "epochs", h.epochs);
  get_to(j, "gamma", h.gamma);
  get_to(j, "gae_lambda", h.gae_lambda);
  get_to(j, "clip_range", h.clip_range);
  get_to(j, "ent_coef", h.ent_coef);
  get_to(j, "vf_coef", h.vf_coef);
  get_to(j, "max_grad_norm", h.max_grad_norm);
  get_to(j, "kl_target", h.kl_target);
  get_to(j, "kl_coef", h.kl_coef);
  get_to(j, "use_adam", h.use_adam);
}

}  // namespace cfgdetail

inline ExperimentConfig parse_experiment_config(const json& input) {
  using namespace cfgdetail;
  // A manifest can be fed back in directly; its config echo is the config.
  const json& j = input.contains("manifest_version") ? input.at("config") : input;
  if (input.contains("manifest_version"))
    check_keys(input, {"manifest_version", "mode", "config", "seeds", "timings", "artifacts"},
               "(manifest root)");

  ExperimentConfig c;
  c.echo = j;
  check_keys(j, {"mode", "out_dir", "seeds", "env", "psa", "meta", "finetune", "nsga2",
                 "evaluate", "variance"},
             "(root)");
  if (!j.contains("mode")) throw std::runtime_error("config: missing required field 'mode'");
  j.at("mode").get_to(c.mode);
  const std::set<std::string> modes{"meta-train", "fine-tune", "nsga2", "evaluate",
                                    "diagnose-variance"};
  if (!modes.contains(c.mode)) throw std::runtime_error("config: unknown mode '" + c.mode + "'");
  get_to(j, "out_dir", c.out_dir);
  get_to(j, "seeds", c.seeds);
  if (c.seeds.empty()) throw std::runtime_error("config: 'seeds' must be non-empty");

  if (j.contains("env")) {
    const json& e = j.at("env");
    check_keys(e, {"complexity", "task_file", "bounds_path", "bounds_episodes",
                   "emission_scale_episodes", "season_amplitude"},
               "env");
    get_to(e, "complexity", c.env.complexity);
    complexity_from_string(c.env.complexity);
    get_to(e, "task_file", c.env.task_file);
    get_to(e, "bounds_path", c.env.bounds_path);
    get_to(e, "bounds_episodes", c.env.bounds_episodes);
    get_to(e, "emission_scale_episodes", c.env.emission_scale_episodes);
    get_to(e, "season_amplitude", c.env.season_amplitude);
  }
  if (j.contains("psa")) {
    const json& p = j.at("psa");
    check_keys(p, {"steps", "rate"}, "psa");
    get_to(p, "steps", c.psa.steps);
    get_to(p, "rate", c.psa.rate);
  }
  c.meta.psa = c.psa;
  c.finetune.psa = c.psa;
  if (j.contains("meta")) {
    const json& m = j.at("meta");
    check_keys(m,
               {"mode", "subproblems", "inner_lr", "outer_lr", "inner_steps", "step_budget",
                "max_iterations", "rollout_episodes", "workers", "outer_max_grad_norm", "hidden",
                "checkpoint_every", "task_bounds_episodes", "metamorl_shared_task", "ppo"},
               "meta");
    if (m.contains("mode")) c.meta.mode = meta_mode_from_string(m.at("mode").get<std::string>());
    get_to(m, "subproblems", c.meta.subproblems);
    get_to(m, "inner_lr", c.meta.inner_lr);
    get_to(m, "outer_lr", c.meta.outer_lr);
    get_to(m, "inner_steps", c.meta.inner_steps);
    get_to(m, "step_budget", c.meta.step_budget);
    get_to(m, "max_iterations", c.meta.max_iterations);
    get_to(m, "rollout_episodes", c.meta.rollout_episodes);
    get_to(m, "workers", c.meta.workers);
    get_to(m, "outer_max_grad_norm", c.meta.outer_max_grad_norm);
    if (m.contains("hidden")) {
      const auto h = m.at("hidden").get<std::vector<int>>();
      if (h.size() != 2) throw std::runtime_error("config: meta.hidden must be [h1, h2]");
      c.meta.hidden1 = h[0];
      c.meta.hidden2 = h[1];
    }
    get_to(m, "checkpoint_every", c.meta.checkpoint_every);
    get_to(m, "task_bounds_episodes", c.meta_task_bounds_episodes);
    get_to(m, "metamorl_shared_task", c.meta.metamorl_shared_task);
    if (m.contains("ppo")) parse_ppo(m.at("ppo"), c.meta.ppo, "meta.ppo");
  }
  if (j.contains("finetune")) {
    const json& f = j.at("finetune");
    check_keys(f, {"solutions", "steps", "steps_add", "eval_episodes", "workers",
                   "meta_checkpoint", "ppo"},
               "finetune");
    get_to(f, "solutions", c.finetune.solutions);
    get_to(f, "steps", c.finetune.steps);
    get_to(f, "steps_add", c.finetune.steps_add);
    get_to(f, "eval_episodes", c.finetune.eval_episodes);
    get_to(f, "workers", c.finetune.workers);
    get_to(f, "meta_checkpoint", c.finetune_meta_checkpoint);
    if (f.contains("ppo")) parse_ppo(f.at("ppo"), c.finetune.ppo, "finetune.ppo");
  }
  if (j.contains("nsga2")) {
    const json& n = j.at("nsga2");
    check_keys(n,
               {"population", "offspring", "crossover_prob", "crossover_eta", "mutation_eta",
                "mutation_prob", "generations", "eval_episodes", "workers"},
               "nsga2");
    get_to(n, "population", c.nsga2.population);
    get_to(n, "offspring", c.nsga2.offspring);
    get_to(n, "crossover_prob", c.nsga2.crossover_prob);
    get_to(n, "crossover_eta", c.nsga2.crossover_eta);
    get_to(n, "mutation_eta", c.nsga2.mutation_eta);
    get_to(n, "mutation_prob", c.nsga2.mutation_prob);
    get_to(n, "generations", c.nsga2.generations);
    get_to(n, "eval_episodes", c.nsga2.eval_episodes);
    get_to(n, "workers", c.nsga2.workers);
  }
  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    check_keys(e, {"algorithms", "pairs", "eum_weight_count", "eum_weight_seed"}, "evaluate");
    if (e.contains("algorithms")) {
      for (const json& a : e.at("algorithms")) {
        check_keys(a, {"name", "pf_files"}, "evaluate.algorithms[]");
        EvaluateAlgorithm algo;
        a.at("name").get_to(algo.name);
        a.at("pf_files").get_to(algo.pf_files);
        c.evaluate.algorithms.push_back(std::move(algo));
      }
    }
    if (e.contains("pairs")) {
      for (const json& p : e.at("pairs")) {
        const auto pair = p.get<std::vector<std::string>>();
        if (pair.size() != 2) throw std::runtime_error("config: evaluate.pairs entries must be [a, b]");
        c.evaluate.pairs.emplace_back(pair[0], pair[1]);
      }
    }
    get_to(e, "eum_weight_count", c.evaluate.eum_weight_count);
    get_to(e, "eum_weight_seed", c.evaluate.eum_weight_seed);
  }
  if (j.contains("variance")) {
    const json& v = j.at("variance");
    check_keys(v, {"k", "b", "repeats", "checkpoint"}, "variance");
    get_to(v, "k", c.variance.k);
    get_to(v, "b", c.variance.b);
    get_to(v, "repeats", c.variance.repeats);
    get_to(v, "checkpoint", c.variance.checkpoint);
  }
  return c;
}

// ---- Shared artifact helpers ----

/// Fixed evaluation weight set shared by every algorithm's EUM report.
inline std::vector<Vec> eum_weight_set(int count, std::uint64_t seed, int d = 3) {
  RngStream rng(derive_seed(seed, {0xe0e0ull}));
  return sample_simplex_weights(count, d, rng);
}

inline std::string pf_csv(const std::vector<ArchiveEntry>& entries) {
  ParetoArchive a;
  for (const auto& e : entries) a.insert(e);
  return a.to_csv();
}

inline std::vector<ArchiveEntry> load_pf_csv(const std::string& path) {
  return ParetoArchive::from_csv(read_text_file(path)).entries();
}

struct MetricsTriple {
  double hypervolume_value = 0.0;
  double eum_value = 0.0;
  double sparsity_value = 0.0;
};

inline MetricsTriple compute_metrics(const std::vector<Vec>& normalized_points,
                                     const std::vector<Vec>& weights) {
  MetricsTriple m;
  const std::vector<Vec> front = non_dominated_filter(normalized_points);
  const Vec ref(normalized_points.at(0).size(), 0.0);
  m.hypervolume_value = hypervolume(front, ref);
  m.eum_value = eum(front, weights);
  m.sparsity_value = sparsity(front);
  return m;
}

// ---- Operational trace export ----

/// Replays one seeded episode with the given per-period unit-action
/// source and writes the three operational trace CSVs.
inline void export_traces(const ScTask& task,
                          const std::function<void(const ScState&, int, std::span<double>)>& act,
                          std::uint64_t episode_seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ostringstream mfg, inv, loss;
  mfg << "period,node,quantity\n";
  inv << "period,node,level\n";
  loss << "period,market,demand,fulfilled,loss\n";
  ScState s = reset(task, episode_seed);
  Vec unit(static_cast<std::size_t>(task.action_dim()));
  const auto inv_nodes = task.topology.inventory_nodes();
  const auto market_ids = task.topology.markets();
  for (int t = 0; t < task.horizon; ++t) {
    act(s, t, unit);
    StepResult r = step(task, s, ActionVector::from_unit(task, unit));
    s = std::move(r.state);
    const int period = t + 1;
    for (int node : task.topology.manufacturers)
      mfg << period << "," << node << "," << format_double(r.info.manufactured[node]) << "\n";
    for (int node : inv_nodes)
      inv << period << "," << node << "," << format_double(s.inventory[node]) << "\n";
    for (std::size_t m = 0; m < market_ids.size(); ++m)
      loss << period << "," << market_ids[m] << "," << format_double(r.info.demand[m]) << ","
           << format_double(r.info.fulfilled[m]) << ","
           << format_double(r.info.demand[m] - r.info.fulfilled[m]) << "\n";
  }
  write_text_file((fs::path(out_dir) / "manufacturing.csv").string(), mfg.str());
  write_text_file((fs::path(out_dir) / "inventory.csv").string(), inv.str());
  write_text_file((fs::path(out_dir) / "demand_loss.csv").string(), loss.str());
}

inline void export_policy_traces(const ScTask& task, const PolicyShape& shape,
                                 std::span<const double> params, std::uint64_t episode_seed,
                                 const std::string& out_dir) {
  Vec obs(static_cast<std::size_t>(task.obs_dim()));
  Vec mu(static_cast<std::size_t>(task.action_dim()));
  export_traces(
      task,
      [&](const ScState& s, int, std::span<double> unit) {
        observe(task, s, obs);
        double value = 0.0;
        policy_forward(shape, params, obs, mu, value);
        for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = clamp01(effective_action_mean(mu[i]));
      },
      episode_seed, out_dir);
}

inline void export_plan_traces(const ScTask& task, std::span<const double> genome,
                               std::uint64_t episode_seed, const std::string& out_dir) {
  if (genome.size() != static_cast<std::size_t>(task.horizon * task.action_dim()))
    throw std::invalid_argument("export_plan_traces: genome length mismatch");
  export_traces(
      task,
      [&](const ScState&, int t, std::span<double> unit) {
        const std::size_t off = static_cast<std::size_t>(t) * unit.size();
        for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = genome[off + i];
      },
      episode_seed, out_dir);
}

// ---- Metric reports ----

/// Per-seed and aggregate metrics for named algorithms, with percentage
/// deltas (relative to the pair's second algorithm) between medians.
inline json report_metrics(const std::vector<EvaluateAlgorithm>& algorithms,
                           const std::vector<std::pair<std::string, std::string>>& pairs,
                           int eum_count, std::uint64_t eum_seed) {
  if (algorithms.empty()) throw std::runtime_error("report_metrics: no PF inputs");
  json out;
  out["schema_version"] = 1;
  out["eum_weight_count"] = eum_count;
  out["eum_weight_seed"] = eum_seed;
  std::size_t dim = 0;
  json algos = json::object();
  std::map<std::string, std::map<std::string, double>> medians;
  for (const auto& algo : algorithms) {
    if (algo.pf_files.empty()) throw std::runtime_error("report_metrics: no PF files for " + algo.name);
    json per_seed = json::array();
    Vec hvs, eums, sps;
    for (const std::string& file : algo.pf_files) {
      const auto entries = load_pf_csv(file);
      if (entries.empty()) throw std::runtime_error("report_metrics: empty PF file " + file);
      std::vector<Vec> points;
      for (const auto& e : entries) points.push_back(e.point);
      if (dim == 0) dim = points[0].size();
      if (points[0].size() != dim)
        throw std::runtime_error("report_metrics: inconsistent objective dimensionality in " + file);
      const auto weights = eum_weight_set(eum_count, eum_seed, static_cast<int>(dim));
      const MetricsTriple m = compute_metrics(points, weights);
      per_seed.push_back({{"file", file},
                          {"hypervolume", m.hypervolume_value},
                          {"eum", m.eum_value},
                          {"sparsity", m.sparsity_value}});
      hvs.push_back(m.hypervolume_value);
      eums.push_back(m.eum_value);
      sps.push_back(m.sparsity_value);
    }
    json agg;
    agg["hypervolume"] = {{"median", median(hvs)}, {"iqr", iqr(hvs)}};
    agg["eum"] = {{"median", median(eums)}, {"iqr", iqr(eums)}};
    agg["sparsity"] = {{"median", median(sps)}, {"iqr", iqr(sps)}};
    medians[algo.name] = {{"hypervolume", median(hvs)}, {"eum", median(eums)}, {"sparsity", median(sps)}};
    algos[algo.name] = {{"per_seed", per_seed}, {"aggregate", agg}};
  }
  out["algorithms"] = algos;
  json deltas = json::object();
  for (const auto& [a, b] : pairs) {
    if (!medians.contains(a) || !medians.contains(b))
      throw std::runtime_error("report_metrics: delta pair references unknown algorithm");
    json d;
    for (const char* metric : {"hypervolume", "eum", "sparsity"}) {
      const double va = medians[a][metric], vb = medians[b][metric];
      d[metric] = vb != 0.0 ? (va - vb) / std::abs(vb) * 100.0 : 0.0;
    }
    deltas[a + "_vs_" + b] = d;
  }
  out["deltas"] = deltas;
  return out;
}

inline std::string metrics_summary_csv(const json& metrics) {
  std::ostringstream out;
  out << "algorithm,metric,median,iqr\n";
  for (const auto& [name, a] : metrics.at("algorithms").items())
    for (const char* metric : {"hypervolume", "eum", "sparsity"})
      out << name << "," << metric << ","
          << format_double(a.at("aggregate").at(metric).at("median").get<double>()) << ","
          << format_double(a.at("aggregate").at(metric).at("iqr").get<double>()) << "\n";
  return out.str();
}

// ---- Run orchestration ----

class RunContext {
 public:
  explicit RunContext(std::string out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  void write(const std::string& rel_path, const std::string& content) {
    const fs::path p = fs::path(out_dir_) / rel_path;
    fs::create_directories(p.parent_path());
    write_text_file(p.string(), content);
    artifacts_.push_back(rel_path);
  }

  std::string path(const std::string& rel_path) const {
    return (fs::path(out_dir_) / rel_path).string();
  }

  void note_artifact(const std::string& rel_path) { artifacts_.push_back(rel_path); }

  void add_timing(const std::string& phase, double seconds) { timings_[phase] = seconds; }

  void write_manifest(const ExperimentConfig& cfg) {
    json m;
    m["manifest_version"] = 1;
    m["mode"] = cfg.mode;
    m["config"] = cfg.echo;
    m["seeds"] = cfg.seeds;
    m["timings"] = timings_;
    json files = json::array();
    std::sort(artifacts_.begin(), artifacts_.end());
    artifacts_.erase(std::unique(artifacts_.begin(), artifacts_.end()), artifacts_.end());
    for (const std::string& rel : artifacts_) {
      files.push_back(
          {{"path", rel}, {"checksum", fnv1a_hex(read_text_file(path(rel)))}});
    }
    m["artifacts"] = files;
    write_text_file(path("manifest.json"), m.dump(2) + "\n");
  }

  const std::string& out_dir() const { return out_dir_; }

 private:
  std::string out_dir_;
  std::vector<std::string> artifacts_;
  std::map<std::string, double> timings_;
};

inline ScTask load_run_task(const EnvConfig& env) {
  if (!env.task_file.empty()) return task_from_json(json::parse(read_text_file(env.task_file)));
  BuildOptions opt;
  opt.emission_scale_episodes = env.emission_scale_episodes;
  opt.season_amplitude = env.season_amplitude;
  // Canonical instances are the held-out evaluation tasks; seed 0 by convention.
  return build_task(complexity_from_string(env.complexity), /*perturb=*/false, 0, opt);
}

/// Loads the shared bounds artifact, fitting and persisting it when absent.
inline ObjectiveBounds load_or_fit_bounds(const ScTask& task, const EnvConfig& env, RunContext& ctx) {
  const std::string path = env.bounds_path.empty() ? ctx.path("bounds.json") : env.bounds_path;
  if (fs::exists(path)) return ObjectiveBounds::from_json(json::parse(read_text_file(path)));
  const ObjectiveBounds b =
      fit_bounds(task, env.bounds_episodes, derive_seed(task.rng_seed, Stream::Bounds));
  fs::create_directories(fs::path(path).parent_path().empty() ? "." : fs::path(path).parent_path());
  write_text_file(path, b.to_json().dump(2) + "\n");
  if (path == ctx.path("bounds.json")) ctx.note_artifact("bounds.json");
  return b;
}

inline std::string seed_dir(const std::string& prefix, std::uint64_t seed) {
  return prefix + "/seed_" + std::to_string(seed);
}

inline std::string substitute_seed(std::string pattern, std::uint64_t seed) {
  const std::string tag = "{seed}";
  const auto pos = pattern.find(tag);
  if (pos != std::string::npos) pattern.replace(pos, tag.size(), std::to_string(seed));
  return pattern;
}

inline int run_experiment(const json& config_json, std::ostream& log = std::cout) {
  const ExperimentConfig cfg = parse_experiment_config(config_json);
  RunContext ctx(cfg.out_dir);
  ctx.write("config.json", cfg.echo.dump(2) + "\n");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  if (cfg.mode == "meta-train") {
    BuildOptions opt;
    opt.emission_scale_episodes = cfg.env.emission_scale_episodes;
    opt.season_amplitude = cfg.env.season_amplitude;
    const ScTaskSampler sampler(complexity_from_string(cfg.env.complexity),
                                cfg.meta_task_bounds_episodes, opt);
    for (std::uint64_t seed : cfg.seeds) {
      MetaConfig mc = cfg.meta;
      const std::string dir = seed_dir("meta", seed);
      mc.checkpoint_dir = ctx.path(dir);
      fs::create_directories(mc.checkpoint_dir);
      const MetaTrainResult r = meta_train(sampler, mc, seed);
      save_params(ctx.path(dir + "/checkpoint_final.params"), r.shape, r.params);
      ctx.note_artifact(dir + "/checkpoint_final.params");
      ctx.write(dir + "/archive.csv", r.archive.to_csv());
      ctx.write(dir + "/train_log.csv", meta_log_csv(r.log));
      log << "[meta-train] seed " << seed << ": " << r.iterations << " iterations, "
          << r.env_steps << " env steps, archive " << r.archive.size() << "\n";
    }
    ctx.add_timing("meta-train", elapsed());
  } else if (cfg.mode == "fine-tune") {
    if (cfg.finetune_meta_checkpoint.empty())
      throw std::runtime_error("config: fine-tune requires 'finetune.meta_checkpoint'");
    const ScTask task = load_run_task(cfg.env);
    const ObjectiveBounds bounds = load_or_fit_bounds(task, cfg.env, ctx);
    const ScRolloutTask rt(task, bounds);
    std::vector<std::string> pf_files;
    for (std::uint64_t seed : cfg.seeds) {
      const std::string ckpt = substitute_seed(cfg.finetune_meta_checkpoint, seed);
      if (!fs::exists(ckpt))
        throw std::runtime_error("fine-tune: meta checkpoint not found: " + ckpt);
      auto [shape, theta] = load_params(ckpt);
      const FinetuneResult r = fine_tune(rt, shape, theta, cfg.finetune, seed, task.rng_seed);
      const std::string dir = seed_dir("finetune", seed);
      ctx.write(dir + "/pf.csv", pf_csv(r.pareto_front));
      pf_files.push_back(ctx.path(dir + "/pf.csv"));
      for (std::size_t k = 0; k < r.policies.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "policy_%03zu.params", k);
        save_params(ctx.path(dir + "/" + name), shape, r.policies[k].params);
        ctx.note_artifact(dir + "/" + name);
      }
      export_policy_traces(task, shape, r.policies[0].params,
                           derive_seed(seed, Stream::Eval, 0x7ace, 0), ctx.path(dir + "/traces"));
      for (const char* f : {"manufacturing.csv", "inventory.csv", "demand_loss.csv"})
        ctx.note_artifact(dir + "/traces/" + f);
      log << "[fine-tune] seed " << seed << ": PF size " << r.pareto_front.size() << ", "
          << r.env_steps << " env steps\n";
    }
    std::vector<EvaluateAlgorithm> algos{{"fine-tune", pf_files}};
    const json metrics =
        report_metrics(algos, {}, cfg.evaluate.eum_weight_count, cfg.evaluate.eum_weight_seed);
    ctx.write("metrics.json", metrics.dump(2) + "\n");
    ctx.write("summary.csv", metrics_summary_csv(metrics));
    ctx.add_timing("fine-tune", elapsed());
  } else if (cfg.mode == "nsga2") {
    const ScTask task = load_run_task(cfg.env);
    const ObjectiveBounds bounds = load_or_fit_bounds(task, cfg.env, ctx);
    const ScRolloutTask rt(task, bounds);
    std::vector<std::string> pf_files;
    for (std::uint64_t seed : cfg.seeds) {
      const Nsga2Result r = run_nsga2(rt, cfg.nsga2, seed);
      const std::string dir = seed_dir("nsga2", seed);
      ctx.write(dir + "/pf.csv", pf_csv(r.front));
      pf_files.push_back(ctx.path(dir + "/pf.csv"));
      std::ostringstream hv;
      hv << "generation,archive_hv,population_hv\n";
      for (const auto& row : r.hv_log)
        hv << row.generation << "," << format_double(row.archive_hv) << ","
           << format_double(row.population_hv) << "\n";
      ctx.write(dir + "/hv_per_generation.csv", hv.str());
      log << "[nsga2] seed " << seed << ": front size " << r.front.size() << ", "
          << r.env_steps << " env steps\n";
    }
    std::vector<EvaluateAlgorithm> algos{{"nsga2", pf_files}};
    const json metrics =
        report_metrics(algos, {}, cfg.evaluate.eum_weight_count, cfg.evaluate.eum_weight_seed);
    ctx.write("metrics.json", metrics.dump(2) + "\n");
    ctx.write("summary.csv", metrics_summary_csv(metrics));
    ctx.add_timing("nsga2", elapsed());
  } else if (cfg.mode == "evaluate") {
    if (cfg.evaluate.algorithms.empty())
      throw std::runtime_error("config: evaluate requires 'evaluate.algorithms'");
    const json metrics = report_metrics(cfg.evaluate.algorithms, cfg.evaluate.pairs,
                                        cfg.evaluate.eum_weight_count, cfg.evaluate.eum_weight_seed);
    ctx.write("metrics.json", metrics.dump(2) + "\n");
    ctx.write("summary.csv", metrics_summary_csv(metrics));
    ctx.add_timing("evaluate", elapsed());
  } else if (cfg.mode == "diagnose-variance") {
    if (cfg.variance.checkpoint.empty())
      throw std::runtime_error("config: diagnose-variance requires 'variance.checkpoint'");
    auto [shape, theta] = load_params(cfg.variance.checkpoint);
    BuildOptions opt;
    opt.emission_scale_episodes = cfg.env.emission_scale_episodes;
    opt.season_amplitude = cfg.env.season_amplitude;
    const ScTaskSampler sampler(complexity_from_string(cfg.env.complexity),
                                cfg.meta_task_bounds_episodes, opt);
    json reports = json::array();
    for (std::uint64_t seed : cfg.seeds) {
      const VarianceReport r = estimate_metagrad_variance(
          sampler, shape, theta, cfg.meta, cfg.variance.k, cfg.variance.b, cfg.variance.repeats, seed);
      reports.push_back({{"seed", seed},
                         {"k", r.k},
                         {"b", r.b},
                         {"repeats", r.repeats},
                         {"miracl_total", r.miracl_total},
                         {"miracl_within_task", r.miracl_within_task},
                         {"miracl_task_induced", r.miracl_task_induced},
                         {"meta_total", r.meta_total}});
      log << "[diagnose-variance] seed " << seed << ": within " << r.miracl_within_task
          << ", total " << r.miracl_total << "\n";
    }
    ctx.write("variance.json", json{{"reports", reports}}.dump(2) + "\n");
    ctx.add_timing("diagnose-variance", elapsed());
  }

  ctx.write_manifest(cfg);
  return 0;
}

}  // namespace miracl
