#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace edp {

// Run-level configuration shared by every subcommand. Unknown JSON keys are
// rejected so typos fail loudly. Field defaults are the reference
// hyperparameters; the shipped task configs override the size-sensitive
// ones for desk-scale runs.
struct RunConfig {
  std::string task = "shellgame";
  std::string dataset_path = "data/shellgame.jsonl";
  uint64_t seed = 100;

  // model dimensions
  int embed_dim = 256;        // token width D
  int window_len = 2;         // working-memory length L
  int memory_tokens = 2;      // episodic tokens M
  int compressor_layers = 2;  // compressor blocks N
  int cache_size = 8;         // max cache size S
  int chunk_len = 8;          // action chunk length H
  int denoiser_layers = 8;
  int mlp_ratio = 4;          // feed-forward hidden = ratio * D

  // diffusion schedule
  int diffusion_steps = 50;   // K
  double beta_start = 1e-4;
  double beta_end = 0.2;

  // memory management
  std::string policy = "fifo";  // fifo | random | kmeans | adjsim
  double dropout = 0.3;         // memory-token dropout ratio
  int subsample_ratio = 5;      // out-of-window frame stride r

  // training
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  int gradient_steps = 600000;
  double ema_rate = 0.999;
  int checkpoint_every = 1000;

  // evaluation
  int eval_episodes = 50;
  int replan_interval = 0;  // 0 -> chunk_len (execute whole chunk, resample)

  // ablations
  bool zero_episodic = false;  // feed the all-zero episodic block
  bool window_only = false;    // drop episodic rows from the condition block

  // data generation
  int num_demos = 100;
  double expert_noise = 0.05;
  int episode_len = 0;  // 0 -> task default; benches override with long runs

  // constant-cost bench
  std::vector<int> bench_probes = {50, 500};
  int bench_repeats = 20;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;
  uint64_t config_hash() const;

  int effective_replan() const { return replan_interval > 0 ? replan_interval : chunk_len; }
  int mlp_hidden() const { return mlp_ratio * embed_dim; }
};

}  // namespace edp
