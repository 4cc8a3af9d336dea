#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "edp/cli.hpp"
#include "edp/evaluator.hpp"
#include "edp/gradcheck.hpp"
#include "edp/ops.hpp"
#include "edp/trainer.hpp"

using namespace edp;

namespace {

RunConfig tiny_config(const std::string& task = "shellgame") {
  RunConfig cfg;
  cfg.task = task;
  cfg.seed = 9001;
  cfg.embed_dim = 12;
  cfg.window_len = 2;
  cfg.memory_tokens = 2;
  cfg.compressor_layers = 2;
  cfg.cache_size = 6;
  cfg.chunk_len = 4;
  cfg.denoiser_layers = 2;
  cfg.mlp_ratio = 2;
  cfg.diffusion_steps = 8;
  cfg.subsample_ratio = 5;
  cfg.batch_size = 8;
  cfg.learning_rate = 2e-3;
  cfg.gradient_steps = 60;
  cfg.eval_episodes = 4;
  cfg.dropout = 0.3;
  cfg.validate();
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path("/tmp/edp_harness_" + name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"edp"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("gradcheck passes cleanly and detects a corrupted backward rule") {
  const GradCheckReport report = run_gradcheck(7, false);
  REQUIRE(report.groups.size() == 4);
  for (const GradCheckGroup& g : report.groups) {
    INFO("group ", g.name, " err ", g.max_rel_err);
    CHECK(g.max_rel_err < 1e-5);
    CHECK(g.scalars > 0);
  }
  CHECK(report.seconds < 120.0);

  const GradCheckReport corrupted = run_gradcheck(7, true);
  CHECK(!corrupted.pass(1e-4));
}

TEST_CASE("training loss gradients vanish exactly for out-of-window observations") {
  const RunConfig cfg = tiny_config();
  const EnvSpec spec = EnvSpec::make(cfg.task);
  PolicyModel model = PolicyModel::init(cfg, spec);
  Rng rng(3);

  // Decision step t = 13: window frames {12, 13}, out-of-window 0..11, of
  // which taus {4, 9} are selected by the deterministic rule.
  const int t = 13;
  std::vector<std::vector<Tensor>> raw_leaves;  // per frame: modality leaf tensors
  for (int i = 0; i <= t; ++i) {
    std::vector<Tensor> mods;
    for (int dim : spec.modality_dims()) {
      Tensor leaf(1, dim, true);
      for (double& v : leaf.values()) v = rng.uniform(-1, 1);
      mods.push_back(leaf);
    }
    raw_leaves.push_back(mods);
  }

  Tensor a0(cfg.chunk_len, spec.act_dim);
  for (double& v : a0.values()) v = rng.uniform(-1, 1);
  Tensor eps(cfg.chunk_len, spec.act_dim);
  for (double& v : eps.values()) v = rng.normal();

  Tape tape;
  // window path: differentiable encodes of frames 12 and 13
  std::vector<Tensor> window_rows;
  for (int i = t - cfg.window_len + 1; i <= t; ++i)
    window_rows.push_back(model.encoder.encode_rows(raw_leaves[static_cast<size_t>(i)]));
  Tensor window = concat_rows(window_rows);

  // episodic path: on-tape encodes of the selected out-of-window frames
  MemoryState st = MemoryState::make(
      static_cast<size_t>(cfg.window_len), static_cast<size_t>(cfg.cache_size), cfg.embed_dim,
      cfg.memory_tokens, cfg.compressor_layers, CachePolicy::fifo, 1);
  std::vector<HistoryFrame> frames;
  for (int tau : subsample_history(out_of_window_len(t, cfg.window_len), cfg.subsample_ratio,
                                   SubsampleMode::infer, nullptr)) {
    Tensor token = model.encoder.encode_rows(raw_leaves[static_cast<size_t>(tau)]);
    frames.push_back(
        HistoryFrame{stamp_out_of_window(ObservationToken{token, tau}), tau});
  }
  REQUIRE(frames.size() == 2);
  Tensor episodic = run_history(frames, model.compressor, st);
  Tensor loss = training_loss_at(window, episodic, a0, 4, eps, model.schedule, model.denoiser);
  tape.backward(loss);

  // out-of-window raw observations: gradient exactly zero (cache detach)
  for (int i = 0; i <= t - cfg.window_len; ++i)
    for (const Tensor& leaf : raw_leaves[static_cast<size_t>(i)])
      for (double g : leaf.grad()) CHECK(g == 0.0);
  // in-window raw observations: generically nonzero
  for (int i = t - cfg.window_len + 1; i <= t; ++i) {
    double acc = 0.0;
    for (const Tensor& leaf : raw_leaves[static_cast<size_t>(i)])
      for (double g : leaf.grad()) acc += std::fabs(g);
    CHECK(acc > 0.0);
  }
  // compressor parameters: nonzero for generic inputs
  double qsum = 0.0;
  for (double g : model.compressor.init_queries.grad()) qsum += std::fabs(g);
  CHECK(qsum > 0.0);
}

TEST_CASE("train_run: zero steps is a no-op; fixed seed reproduces the loss curve") {
  RunConfig cfg = tiny_config();
  const EnvSpec spec = EnvSpec::make(cfg.task);
  const DemoDataset ds = generate_dataset(spec, 3, 5, 0.05);

  cfg.gradient_steps = 0;
  PolicyModel before = PolicyModel::init(cfg, spec);
  const std::vector<double> q0 = before.compressor.init_queries.values();
  const TrainResult r0 = train_run(cfg, ds, before);
  CHECK(r0.ok);
  CHECK(r0.rows.empty());
  CHECK(before.compressor.init_queries.values() == q0);

  cfg.gradient_steps = 12;
  auto run_once = [&] {
    PolicyModel model = PolicyModel::init(cfg, spec);
    return train_run(cfg, ds, model);
  };
  const TrainResult a = run_once();
  const TrainResult b = run_once();
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].loss == b.rows[i].loss);
    CHECK(a.rows[i].grad_norm == b.rows[i].grad_norm);
  }
}

TEST_CASE("overfitting one trajectory drives the loss below a tenth of its start") {
  RunConfig cfg = tiny_config();
  cfg.gradient_steps = 500;
  cfg.dropout = 0.0;
  const EnvSpec spec = EnvSpec::make(cfg.task);
  DemoDataset ds = generate_dataset(spec, 1, 2, 0.05);
  PolicyModel model = PolicyModel::init(cfg, spec);
  const TrainResult result = train_run(cfg, ds, model);
  REQUIRE(result.ok);
  REQUIRE(result.rows.size() == 500);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 30; ++i) {
    first += result.rows[static_cast<size_t>(i)].loss;
    last += result.rows[result.rows.size() - 1 - static_cast<size_t>(i)].loss;
  }
  INFO("first ", first / 30, " last ", last / 30);
  CHECK(last < 0.1 * first);
}

TEST_CASE("expert replay through the evaluator reproduces expert success") {
  RunConfig cfg = tiny_config();
  const EnvSpec spec = EnvSpec::make(cfg.task);
  const DemoDataset ds = generate_dataset(spec, 20, 8, 0.05);
  PolicyModel model = PolicyModel::init(cfg, spec);

  double successes = 0.0;
  for (const Trajectory& traj : ds.trajectories) {
    EvalOptions opts;
    opts.replay = &traj;
    successes += evaluate(model, cfg, opts).success_rate;
  }
  CHECK(successes / static_cast<double>(ds.trajectories.size()) >= 0.95);
}

TEST_CASE("streaming evaluation and the training path build the same memory") {
  RunConfig cfg = tiny_config();
  cfg.dropout = 0.0;
  const EnvSpec spec = EnvSpec::make(cfg.task);
  const DemoDataset ds = generate_dataset(spec, 2, 13, 0.05);
  PolicyModel model = PolicyModel::init(cfg, spec);
  const Trajectory& traj = ds.trajectories.front();

  std::vector<std::pair<int, std::vector<double>>> trace;
  EvalOptions opts;
  opts.replay = &traj;
  opts.episodic_trace = &trace;
  evaluate(model, cfg, opts);
  REQUIRE(static_cast<int>(trace.size()) == traj.length());

  for (const auto& [t, streamed] : trace) {
    const Tensor trained = episodic_for_sample(model, traj, t, SubsampleMode::infer, nullptr, 1);
    REQUIRE(trained.values().size() == streamed.size());
    for (size_t i = 0; i < streamed.size(); ++i)
      CHECK(std::fabs(trained.values()[i] - streamed[i]) <= 1e-10);
  }
}

TEST_CASE("evaluate returns exactly the requested number of episodes") {
  RunConfig cfg = tiny_config("reach");
  const EnvSpec spec = EnvSpec::make(cfg.task);
  PolicyModel model = PolicyModel::init(cfg, spec);
  cfg.eval_episodes = 7;
  const EvalResult r = evaluate(model, cfg);
  CHECK(r.episodes == 7);
  CHECK(r.success_rate >= 0.0);
  CHECK(r.success_rate <= 1.0);
  CHECK(r.task == "reach");
}

TEST_CASE("zero_episodic equals a model whose episodic head is zeroed") {
  RunConfig cfg = tiny_config();
  cfg.eval_episodes = 3;
  const EnvSpec spec = EnvSpec::make(cfg.task);

  RunConfig ablated = cfg;
  ablated.zero_episodic = true;
  PolicyModel m1 = PolicyModel::init(cfg, spec);
  const EvalResult r1 = evaluate(m1, ablated);

  // zero the compressor head: e = W2 * act(...) + b2 becomes exactly zero
  PolicyModel m2 = PolicyModel::init(cfg, spec);
  for (double& v : m2.compressor.head.w2.values()) v = 0.0;
  for (double& v : m2.compressor.head.b2.values()) v = 0.0;
  const EvalResult r2 = evaluate(m2, cfg);

  CHECK(r1.success_rate == r2.success_rate);
  CHECK(r1.mean_episode_len == r2.mean_episode_len);
}

TEST_CASE("window_only conditioning trains and evaluates") {
  RunConfig cfg = tiny_config();
  cfg.window_only = true;
  cfg.gradient_steps = 5;
  cfg.eval_episodes = 2;
  const EnvSpec spec = EnvSpec::make(cfg.task);
  const DemoDataset ds = generate_dataset(spec, 2, 3, 0.05);
  PolicyModel model = PolicyModel::init(cfg, spec);
  const TrainResult r = train_run(cfg, ds, model);
  CHECK(r.ok);
  const EvalResult e = evaluate(model, cfg);
  CHECK(e.episodes == 2);
}

TEST_CASE("checkpoints round-trip parameters, EMA, and the normalizer") {
  TempDir dir("ckpt");
  RunConfig cfg = tiny_config();
  cfg.gradient_steps = 8;
  const EnvSpec spec = EnvSpec::make(cfg.task);
  const DemoDataset ds = generate_dataset(spec, 2, 4, 0.05);
  PolicyModel model = PolicyModel::init(cfg, spec);
  const TrainResult result = train_run(cfg, ds, model, dir.file("checkpoint.json"));
  REQUIRE(result.ok);

  PolicyModel loaded = PolicyModel::init(cfg, spec);
  const auto ema = load_checkpoint(dir.file("checkpoint.json"), loaded);
  REQUIRE(ema.size() == loaded.params.entries().size());
  for (size_t i = 0; i < loaded.params.entries().size(); ++i) {
    CHECK(loaded.params.entries()[i].tensor.values() ==
          model.params.entries()[i].tensor.values());
    CHECK(ema[i] == result.ema_shadow[i]);
  }
  CHECK(loaded.normalizer.lo == model.normalizer.lo);
  CHECK(loaded.normalizer.hi == model.normalizer.hi);

  // shape mismatch is rejected
  RunConfig other = cfg;
  other.embed_dim = 16;
  PolicyModel wrong = PolicyModel::init(other, spec);
  CHECK_THROWS_AS(load_checkpoint(dir.file("checkpoint.json"), wrong), std::runtime_error);
}

TEST_CASE("bench: live token count is identical once caches are full") {
  RunConfig cfg = tiny_config("longhorizon");
  cfg.episode_len = 90;
  cfg.cache_size = 4;
  cfg.bench_probes = {55, 80};
  const EnvSpec spec = EnvSpec::make(cfg.task, cfg.episode_len);
  PolicyModel model = PolicyModel::init(cfg, spec);
  const auto rows = bench_constant_cost(model, cfg, cfg.bench_probes, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].probe_step == 55);
  CHECK(rows[1].probe_step == 80);
  CHECK(rows[0].tokens_live == rows[1].tokens_live);
  const int expected = cfg.window_len + cfg.cache_size +
                       cfg.compressor_layers * cfg.cache_size * cfg.memory_tokens;
  CHECK(rows[0].tokens_live == expected);
  CHECK(rows[0].ms_per_decision > 0.0);
}

TEST_CASE("cli: gen-data writes the configured dataset; bad input fails loudly") {
  TempDir dir("cli");
  RunConfig cfg = tiny_config();
  cfg.num_demos = 2;
  cfg.dataset_path = dir.file("demos.jsonl");
  {
    std::ofstream out(dir.file("config.json"));
    out << cfg.to_json().dump(2);
  }
  CHECK(run_cli({"gen-data", "--config", dir.file("config.json").c_str()}) == 0);
  CHECK(std::filesystem::exists(cfg.dataset_path));
  const DemoDataset ds = load_dataset(cfg.dataset_path);
  CHECK(ds.trajectories.size() == 2);

  CHECK(run_cli({"train", "--config", "/tmp/edp_missing_config.json", "--out",
                 dir.file("out").c_str()}) != 0);
  CHECK(run_cli({"frobnicate"}) != 0);
  CHECK(run_cli({"train", "--bogus-flag"}) != 0);
  CHECK(run_cli({}) != 0);

  // config with an unknown key is rejected
  {
    std::ofstream out(dir.file("bad.json"));
    out << R"({"task": "shellgame", "not_a_key": 1})";
  }
  CHECK(run_cli({"gen-data", "--config", dir.file("bad.json").c_str()}) != 0);
}

TEST_CASE("cli: train then eval produces metrics files with the right fields") {
  TempDir dir("trainval");
  RunConfig cfg = tiny_config();
  cfg.num_demos = 2;
  cfg.gradient_steps = 6;
  cfg.eval_episodes = 2;
  cfg.dataset_path = dir.file("demos.jsonl");
  const std::string config_path = dir.file("config.json");
  {
    std::ofstream out(config_path);
    out << cfg.to_json().dump(2);
  }
  const std::string out_dir = dir.file("run");
  REQUIRE(run_cli({"gen-data", "--config", config_path.c_str()}) == 0);
  REQUIRE(run_cli({"train", "--config", config_path.c_str(), "--out", out_dir.c_str()}) == 0);
  REQUIRE(run_cli({"eval", "--config", config_path.c_str(), "--out", out_dir.c_str()}) == 0);

  const std::string csv = slurp(out_dir + "/train_metrics.csv");
  CHECK(csv.rfind("step,loss,grad_norm\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 6 steps

  const std::string eval_json = slurp(out_dir + "/eval_metrics.json");
  CHECK(eval_json.find("success_rate") != std::string::npos);
  CHECK(eval_json.find("mean_episode_len") != std::string::npos);
}
