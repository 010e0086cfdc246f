// Command-line driver: `run` executes an experiment config (or re-executes
// a manifest), `print-task` emits a task file, `export-traces` replays a
// stored policy or plan into operational trace CSVs.
#include <CLI11.hpp>

#include <iostream>

#include "miracl/experiment.hpp"

namespace {

nlohmann::json parse_override_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return nlohmann::json(text);  // bare strings are fine unquoted
  }
}

void apply_override(nlohmann::json& config, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("--override expects key.path=value, got '" + spec + "'");
  std::string pointer = "/" + spec.substr(0, eq);
  for (auto& c : pointer)
    if (c == '.') c = '/';
  config[nlohmann::json::json_pointer(pointer)] = parse_override_value(spec.substr(eq + 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIRACL supply-chain meta-MORL experiment driver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> overrides;
  CLI::App* run = app.add_subcommand("run", "Execute an experiment config or manifest");
  run->add_option("config", config_path, "JSON config (or manifest.json to re-execute)")->required();
  run->add_option("--seed", seeds, "Replace the config's seed list");
  run->add_option("--out", out_dir, "Replace the config's output directory");
  run->add_option("--override", overrides, "Override a config field, e.g. finetune.steps=1000");

  std::string complexity = "simple", task_out;
  bool perturb = false;
  std::uint64_t task_seed = 0;
  int emission_episodes = 100;
  CLI::App* print_task = app.add_subcommand("print-task", "Emit a canonical task as JSON");
  print_task->add_option("--complexity", complexity, "simple|moderate|complex");
  print_task->add_flag("--perturb", perturb, "Apply the [0.9, 1.1] parameter perturbation");
  print_task->add_option("--seed", task_seed, "Task seed");
  print_task->add_option("--emission-episodes", emission_episodes,
                         "Random episodes for the emission observation scale");
  print_task->add_option("--out", task_out, "Write to a file instead of stdout");

  std::string trace_task, checkpoint, genome_file, trace_out = "traces";
  int genome_id = 0;
  std::uint64_t trace_seed = 0;
  CLI::App* traces = app.add_subcommand("export-traces", "Replay a policy or plan into trace CSVs");
  traces->add_option("--task", trace_task, "Complexity name or task JSON file")->required();
  traces->add_option("--checkpoint", checkpoint, "Policy parameter file");
  traces->add_option("--plan", genome_file, "CSV file of unit actions, one period per row");
  traces->add_option("--plan-row", genome_id, "Unused; reserved for multi-plan files");
  traces->add_option("--seed", trace_seed, "Episode seed");
  traces->add_option("--out", trace_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      nlohmann::json config = nlohmann::json::parse(miracl::read_text_file(config_path));
      nlohmann::json& root = config.contains("manifest_version") ? config["config"] : config;
      for (const std::string& o : overrides) apply_override(root, o);
      if (!seeds.empty()) root["seeds"] = seeds;
      if (!out_dir.empty()) root["out_dir"] = out_dir;
      return miracl::run_experiment(config);
    }
    if (*print_task) {
      miracl::BuildOptions opt;
      opt.emission_scale_episodes = emission_episodes;
      const miracl::ScTask t = miracl::build_task(complexity, perturb, task_seed, opt);
      const std::string text = miracl::task_to_json(t).dump(2) + "\n";
      if (task_out.empty()) std::cout << text;
      else miracl::write_text_file(task_out, text);
      return 0;
    }
    if (*traces) {
      miracl::ScTask task;
      if (trace_task == "simple" || trace_task == "moderate" || trace_task == "complex")
        task = miracl::build_task(trace_task, false, 0);
      else
        task = miracl::task_from_json(nlohmann::json::parse(miracl::read_text_file(trace_task)));
      if (!checkpoint.empty()) {
        auto [shape, params] = miracl::load_params(checkpoint);
        if (shape.obs != task.obs_dim() || shape.act != task.action_dim())
          throw std::runtime_error("checkpoint shape does not match the task");
        miracl::export_policy_traces(task, shape, params, trace_seed, trace_out);
      } else if (!genome_file.empty()) {
        miracl::Vec plan;
        std::istringstream in(miracl::read_text_file(genome_file));
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          for (const std::string& f : miracl::split_csv_line(line)) plan.push_back(std::stod(f));
        }
        miracl::export_plan_traces(task, plan, trace_seed, trace_out);
      } else {
        throw std::runtime_error("export-traces needs --checkpoint or --plan");
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
