#include "edp/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edp/evaluator.hpp"
#include "edp/gradcheck.hpp"
#include "edp/model.hpp"
#include "edp/trainer.hpp"

namespace edp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

void write_train_csv(const std::string& path, const std::vector<TrainMetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("edp: cannot write metrics: " + path);
  out << "step,loss,grad_norm\n";
  char line[128];
  for (const TrainMetricsRow& r : rows) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", r.step, r.loss, r.grad_norm);
    out << line;
  }
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("edp: cannot write metrics: " + path);
  out << doc.dump(2) << "\n";
}

void apply_ema(PolicyModel& model, const std::vector<std::vector<double>>& ema) {
  const auto& entries = model.params.entries();
  for (size_t i = 0; i < entries.size(); ++i)
    const_cast<Tensor&>(entries[i].tensor).values() = ema[i];
}

DemoDataset load_and_check_dataset(const RunConfig& cfg, const EnvSpec& spec) {
  DemoDataset ds = load_dataset(cfg.dataset_path);
  if (ds.task != cfg.task)
    throw std::runtime_error("edp: dataset was generated for task '" + ds.task +
                             "' but the config says '" + cfg.task + "'");
  if (ds.obs_dim != spec.obs_dim || ds.act_dim != spec.act_dim)
    throw std::runtime_error("edp: dataset dimensions do not match task '" + cfg.task + "'");
  return ds;
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg) {
  const EnvSpec spec = EnvSpec::make(cfg.task, cfg.episode_len);
  DemoDataset ds = generate_dataset(spec, cfg.num_demos, cfg.seed, cfg.expert_noise);
  const fs::path parent = fs::path(cfg.dataset_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  save_dataset(ds, cfg.dataset_path);
  std::cout << "wrote " << ds.trajectories.size() << " demonstrations to "
            << cfg.dataset_path << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const EnvSpec spec = EnvSpec::make(cfg.task, cfg.episode_len);
  DemoDataset ds = load_and_check_dataset(cfg, spec);
  PolicyModel model = PolicyModel::init(cfg, spec);
  TrainResult result = train_run(cfg, ds, model, join(out_dir, "checkpoint.json"));
  write_train_csv(join(out_dir, "train_metrics.csv"), result.rows);
  if (!result.ok) {
    std::cerr << "edp: " << result.error << "\n";
    return 1;
  }
  std::cout << "trained " << result.rows.size() << " steps; final loss "
            << (result.rows.empty() ? 0.0 : result.rows.back().loss) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& out_dir,
             const std::string& checkpoint_path) {
  ensure_dir(out_dir);
  const EnvSpec spec = EnvSpec::make(cfg.task, cfg.episode_len);
  PolicyModel model = PolicyModel::init(cfg, spec);
  apply_ema(model, load_checkpoint(checkpoint_path, model));
  const EvalResult r = evaluate(model, cfg);
  write_json(join(out_dir, "eval_metrics.json"),
             json{{"task", r.task},
                  {"seed", r.seed},
                  {"episodes", r.episodes},
                  {"success_rate", r.success_rate},
                  {"mean_episode_len", r.mean_episode_len}});
  std::cout << "success_rate " << r.success_rate << " over " << r.episodes << " episodes\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& out_dir,
              const std::string& checkpoint_path) {
  ensure_dir(out_dir);
  const EnvSpec spec = EnvSpec::make(cfg.task, cfg.episode_len);
  PolicyModel model = PolicyModel::init(cfg, spec);
  if (!checkpoint_path.empty() && fs::exists(checkpoint_path))
    apply_ema(model, load_checkpoint(checkpoint_path, model));
  const std::vector<BenchRow> rows =
      bench_constant_cost(model, cfg, cfg.bench_probes, cfg.bench_repeats);
  json out = json::array();
  for (const BenchRow& r : rows)
    out.push_back({{"probe_step", r.probe_step},
                   {"tokens_live", r.tokens_live},
                   {"ms_per_decision", r.ms_per_decision}});
  write_json(join(out_dir, "bench_metrics.json"), out);
  for (const BenchRow& r : rows)
    std::cout << "step " << r.probe_step << ": " << r.tokens_live << " live tokens, "
              << r.ms_per_decision << " ms/decision\n";
  return 0;
}

int cmd_gradcheck(const std::string& out_dir) {
  const GradCheckReport report = run_gradcheck();
  json groups = json::array();
  for (const GradCheckGroup& g : report.groups) {
    std::printf("%-12s %8zu scalars  max rel err %.3e\n", g.name.c_str(), g.scalars,
                g.max_rel_err);
    groups.push_back({{"group", g.name}, {"scalars", g.scalars}, {"max_rel_err", g.max_rel_err}});
  }
  std::printf("worst %.3e in %.2fs\n", report.worst, report.seconds);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_json(join(out_dir, "gradcheck.json"),
               json{{"groups", groups}, {"worst", report.worst}});
  }
  return report.pass(1e-4) ? 0 : 1;
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"memory-augmented diffusion policy toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string checkpoint_path;
  std::optional<uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    CLI::Option* copt = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) copt->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_dir, "output directory for metrics");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate expert demonstrations");
  add_common(gen, true);
  CLI::App* train = app.add_subcommand("train", "run the behavior-cloning loop");
  add_common(train, true);
  CLI::App* eval_cmd = app.add_subcommand("eval", "closed-loop policy evaluation");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate");
  CLI::App* bench = app.add_subcommand("bench", "per-decision cost probes");
  add_common(bench, true);
  bench->add_option("--checkpoint", checkpoint_path, "optional checkpoint");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  add_common(gradcheck, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::from_json_file(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (checkpoint_path.empty()) checkpoint_path = join(out_dir, "checkpoint.json");

    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg, out_dir);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out_dir, checkpoint_path);
    if (bench->parsed()) return cmd_bench(cfg, out_dir, checkpoint_path);
    if (gradcheck->parsed()) return cmd_gradcheck(out_dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace edp
