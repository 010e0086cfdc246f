#include <doctest.h>

#include <filesystem>

#include "miracl/experiment.hpp"

using namespace miracl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

json tiny_nsga2_config(const std::string& out) {
  return json{{"mode", "nsga2"},
              {"out_dir", out},
              {"seeds", {1}},
              {"env",
               {{"complexity", "simple"},
                {"bounds_episodes", 4},
                {"emission_scale_episodes", 2}}},
              {"nsga2",
               {{"population", 8},
                {"offspring", 4},
                {"generations", 2},
                {"eval_episodes", 1}}}};
}

}  // namespace

TEST_CASE("config parsing: unknown fields are rejected with their path") {
  json bad = tiny_nsga2_config("/tmp/x");
  bad["nsga2"]["popsize"] = 5;
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad),
                       "config: unknown field 'popsize' at nsga2", std::runtime_error);

  json bad_root = tiny_nsga2_config("/tmp/x");
  bad_root["modes"] = "nsga2";
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad_root),
                       "config: unknown field 'modes' at (root)", std::runtime_error);

  CHECK_THROWS_WITH_AS(parse_experiment_config(json{{"out_dir", "x"}}),
                       "config: missing required field 'mode'", std::runtime_error);
  CHECK_THROWS_AS(parse_experiment_config(json{{"mode", "train"}}), std::runtime_error);

  json no_seeds = tiny_nsga2_config("/tmp/x");
  no_seeds["seeds"] = json::array();
  CHECK_THROWS_AS(parse_experiment_config(no_seeds), std::runtime_error);
}

TEST_CASE("fine-tune mode requires the meta checkpoint field") {
  TempDir dir("miracl_test_ft_missing");
  const json cfg{{"mode", "fine-tune"}, {"out_dir", dir.str()}, {"seeds", {1}}};
  CHECK_THROWS_WITH_AS(run_experiment(cfg),
                       "config: fine-tune requires 'finetune.meta_checkpoint'",
                       std::runtime_error);
}

TEST_CASE("minimal meta-train run writes manifest, checkpoint, archive and log") {
  TempDir dir("miracl_test_meta_run");
  const json cfg{{"mode", "meta-train"},
                 {"out_dir", dir.str()},
                 {"seeds", {3}},
                 {"env", {{"complexity", "simple"}, {"emission_scale_episodes", 2}}},
                 {"meta",
                  {{"subproblems", 2},
                   {"inner_steps", 1},
                   {"max_iterations", 1},
                   {"rollout_episodes", 1},
                   {"task_bounds_episodes", 2},
                   {"hidden", {8, 8}},
                   {"ppo", {{"minibatch_size", 50}, {"epochs", 2}}}}}};
  std::ostringstream sink;
  CHECK(run_experiment(cfg, sink) == 0);
  CHECK(fs::exists(dir.str("manifest.json")));
  CHECK(fs::exists(dir.str("meta/seed_3/checkpoint_final.params")));
  CHECK(fs::exists(dir.str("meta/seed_3/archive.csv")));
  CHECK(fs::exists(dir.str("meta/seed_3/train_log.csv")));

  const json manifest = json::parse(read_text_file(dir.str("manifest.json")));
  CHECK(manifest.at("manifest_version") == 1);
  CHECK(manifest.at("artifacts").size() >= 4);
  // Listed checksums match the files on disk.
  for (const auto& a : manifest.at("artifacts")) {
    const std::string rel = a.at("path").get<std::string>();
    CHECK(a.at("checksum").get<std::string>() == fnv1a_hex(read_text_file(dir.str(rel))));
  }
}

TEST_CASE("nsga2 mode runs and evaluate mode reproduces mo_metrics directly") {
  TempDir dir("miracl_test_nsga_run");
  std::ostringstream sink;
  REQUIRE(run_experiment(tiny_nsga2_config(dir.str()), sink) == 0);
  const std::string pf_path = dir.str("nsga2/seed_1/pf.csv");
  REQUIRE(fs::exists(pf_path));
  REQUIRE(fs::exists(dir.str("nsga2/seed_1/hv_per_generation.csv")));

  TempDir eval_dir("miracl_test_eval_run");
  const json eval_cfg{{"mode", "evaluate"},
                      {"out_dir", eval_dir.str()},
                      {"seeds", {1}},
                      {"evaluate",
                       {{"algorithms", {{{"name", "nsga2"}, {"pf_files", {pf_path}}}}},
                        {"eum_weight_count", 50},
                        {"eum_weight_seed", 7}}}};
  REQUIRE(run_experiment(eval_cfg, sink) == 0);
  const json metrics = json::parse(read_text_file(eval_dir.str("metrics.json")));
  const double hv_reported =
      metrics.at("algorithms").at("nsga2").at("per_seed").at(0).at("hypervolume").get<double>();

  const auto entries = load_pf_csv(pf_path);
  std::vector<Vec> points;
  for (const auto& e : entries) points.push_back(e.point);
  const double hv_direct = hypervolume(non_dominated_filter(points), Vec{0, 0, 0});
  CHECK(hv_reported == hv_direct);

  const double eum_reported =
      metrics.at("algorithms").at("nsga2").at("per_seed").at(0).at("eum").get<double>();
  CHECK(eum_reported ==
        eum(non_dominated_filter(points), eum_weight_set(50, 7, 3)));
}

TEST_CASE("evaluate mode: identical algorithm inputs give zero deltas") {
  TempDir run_dir("miracl_test_delta_run");
  std::ostringstream sink;
  REQUIRE(run_experiment(tiny_nsga2_config(run_dir.str()), sink) == 0);
  const std::string pf = run_dir.str("nsga2/seed_1/pf.csv");

  TempDir dir("miracl_test_delta_eval");
  const json cfg{{"mode", "evaluate"},
                 {"out_dir", dir.str()},
                 {"seeds", {1}},
                 {"evaluate",
                  {{"algorithms",
                    {{{"name", "a"}, {"pf_files", {pf}}}, {{"name", "b"}, {"pf_files", {pf}}}}},
                   {"pairs", json::array({json::array({"a", "b"})})}}}};
  REQUIRE(run_experiment(cfg, sink) == 0);
  const json metrics = json::parse(read_text_file(dir.str("metrics.json")));
  for (const char* m : {"hypervolume", "eum", "sparsity"})
    CHECK(metrics.at("deltas").at("a_vs_b").at(m).get<double>() == 0.0);
}

TEST_CASE("re-running from the manifest reproduces PF csvs byte for byte") {
  TempDir first("miracl_test_repro_a");
  std::ostringstream sink;
  REQUIRE(run_experiment(tiny_nsga2_config(first.str()), sink) == 0);
  const std::string pf_a = read_text_file(first.str("nsga2/seed_1/pf.csv"));
  const std::string hv_a = read_text_file(first.str("nsga2/seed_1/hv_per_generation.csv"));

  json manifest = json::parse(read_text_file(first.str("manifest.json")));
  TempDir second("miracl_test_repro_b");
  manifest["config"]["out_dir"] = second.str();
  REQUIRE(run_experiment(manifest, sink) == 0);
  CHECK(read_text_file(second.str("nsga2/seed_1/pf.csv")) == pf_a);
  CHECK(read_text_file(second.str("nsga2/seed_1/hv_per_generation.csv")) == hv_a);
}

TEST_CASE("trace export: zero policy loses all demand; replay is byte-stable") {
  TempDir dir("miracl_test_traces");
  BuildOptions opt;
  opt.emission_scale_episodes = 2;
  ScTask task = build_task(Complexity::Simple, false, 0, opt);
  // Zero out initial stock so nothing can ship.
  for (double& v : task.initial_inventory) v = 0.0;
  const PolicyShape shape{task.obs_dim(), task.action_dim(), 8, 8};
  Vec params(static_cast<std::size_t>(shape.param_count()), 0.0);
  for (int i = 0; i < shape.act; ++i) params[shape.bm() + i] = -10.0;  // clip to zero actions

  export_policy_traces(task, shape, params, 5, dir.str("t1"));
  const std::string loss_csv = read_text_file(dir.str("t1/demand_loss.csv"));
  std::istringstream in(loss_csv);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    REQUIRE(f.size() == 5);
    CHECK(f[2] == f[4]);       // loss equals demand
    CHECK(f[3] == "0");        // nothing fulfilled
    ++rows;
  }
  CHECK(rows == task.horizon * task.n_markets());

  export_policy_traces(task, shape, params, 5, dir.str("t2"));
  CHECK(read_text_file(dir.str("t2/demand_loss.csv")) == loss_csv);
  CHECK(read_text_file(dir.str("t2/manufacturing.csv")) ==
        read_text_file(dir.str("t1/manufacturing.csv")));
}

TEST_CASE("trace export: manufacturing column sums match an in-process replay") {
  TempDir dir("miracl_test_traces_mfg");
  BuildOptions opt;
  opt.emission_scale_episodes = 2;
  const ScTask task = build_task(Complexity::Simple, false, 0, opt);
  const PolicyShape shape{task.obs_dim(), task.action_dim(), 8, 8};
  Vec params(static_cast<std::size_t>(shape.param_count()), 0.0);
  for (int i = 0; i < shape.act; ++i) params[shape.bm() + i] = 10.0;  // saturate at caps

  export_policy_traces(task, shape, params, 9, dir.str("t"));

  std::map<int, double> csv_sum;
  std::istringstream in(read_text_file(dir.str("t/manufacturing.csv")));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    csv_sum[std::stoi(f[1])] += std::stod(f[2]);
  }

  std::map<int, double> replay_sum;
  ScState s = reset(task, 9);
  ActionVector a;
  a.transport.assign(task.topology.edges.size(), task.transport_cap);
  a.manufacture.assign(task.topology.manufacturers.size(), task.mfg_cap);
  for (int t = 0; t < task.horizon; ++t) {
    StepResult r = step(task, s, a);
    s = std::move(r.state);
    for (int node : task.topology.manufacturers) replay_sum[node] += r.info.manufactured[node];
  }
  CHECK(csv_sum == replay_sum);
}

TEST_CASE("cli override grammar") {
  // Mirrors the --override path rewriting done by the CLI.
  json cfg = tiny_nsga2_config("/tmp/x");
  cfg[json::json_pointer("/nsga2/generations")] = 7;
  CHECK(parse_experiment_config(cfg).nsga2.generations == 7);
}
