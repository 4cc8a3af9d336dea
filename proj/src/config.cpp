#include "edp/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "edp/memory.hpp"
#include "edp/tensor.hpp"

namespace edp {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task",           "dataset_path",   "seed",
      "embed_dim",      "window_len",     "memory_tokens",
      "compressor_layers", "cache_size",  "chunk_len",
      "denoiser_layers", "mlp_ratio",
      "diffusion_steps", "beta_start",    "beta_end",
      "policy",         "dropout",        "subsample_ratio",
      "batch_size",     "learning_rate",  "weight_decay",
      "gradient_steps", "ema_rate",       "checkpoint_every",
      "eval_episodes",  "replan_interval",
      "zero_episodic",  "window_only",
      "num_demos",      "expert_noise",   "episode_len",
      "bench_probes",   "bench_repeats"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::runtime_error("edp: config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (known_keys().count(it.key()) == 0)
      throw std::runtime_error("edp: unknown config key: " + it.key());
  }
  RunConfig c;
  read(j, "task", c.task);
  read(j, "dataset_path", c.dataset_path);
  read(j, "seed", c.seed);
  read(j, "embed_dim", c.embed_dim);
  read(j, "window_len", c.window_len);
  read(j, "memory_tokens", c.memory_tokens);
  read(j, "compressor_layers", c.compressor_layers);
  read(j, "cache_size", c.cache_size);
  read(j, "chunk_len", c.chunk_len);
  read(j, "denoiser_layers", c.denoiser_layers);
  read(j, "mlp_ratio", c.mlp_ratio);
  read(j, "diffusion_steps", c.diffusion_steps);
  read(j, "beta_start", c.beta_start);
  read(j, "beta_end", c.beta_end);
  read(j, "policy", c.policy);
  read(j, "dropout", c.dropout);
  read(j, "subsample_ratio", c.subsample_ratio);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "gradient_steps", c.gradient_steps);
  read(j, "ema_rate", c.ema_rate);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "eval_episodes", c.eval_episodes);
  read(j, "replan_interval", c.replan_interval);
  read(j, "zero_episodic", c.zero_episodic);
  read(j, "window_only", c.window_only);
  read(j, "num_demos", c.num_demos);
  read(j, "expert_noise", c.expert_noise);
  read(j, "episode_len", c.episode_len);
  read(j, "bench_probes", c.bench_probes);
  read(j, "bench_repeats", c.bench_repeats);
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("edp: cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("edp: config is not valid JSON: " + path);
  return from_json(j);
}

json RunConfig::to_json() const {
  return json{{"task", task},
              {"dataset_path", dataset_path},
              {"seed", seed},
              {"embed_dim", embed_dim},
              {"window_len", window_len},
              {"memory_tokens", memory_tokens},
              {"compressor_layers", compressor_layers},
              {"cache_size", cache_size},
              {"chunk_len", chunk_len},
              {"denoiser_layers", denoiser_layers},
              {"mlp_ratio", mlp_ratio},
              {"diffusion_steps", diffusion_steps},
              {"beta_start", beta_start},
              {"beta_end", beta_end},
              {"policy", policy},
              {"dropout", dropout},
              {"subsample_ratio", subsample_ratio},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"weight_decay", weight_decay},
              {"gradient_steps", gradient_steps},
              {"ema_rate", ema_rate},
              {"checkpoint_every", checkpoint_every},
              {"eval_episodes", eval_episodes},
              {"replan_interval", replan_interval},
              {"zero_episodic", zero_episodic},
              {"window_only", window_only},
              {"num_demos", num_demos},
              {"expert_noise", expert_noise},
              {"episode_len", episode_len},
              {"bench_probes", bench_probes},
              {"bench_repeats", bench_repeats}};
}

void RunConfig::validate() const {
  detail::check_shape(embed_dim >= 4 && embed_dim % 2 == 0,
                      "config: embed_dim must be even and >= 4");
  detail::check_shape(window_len >= 1, "config: window_len must be >= 1");
  detail::check_shape(memory_tokens >= 1, "config: memory_tokens must be >= 1");
  detail::check_shape(compressor_layers >= 1, "config: compressor_layers must be >= 1");
  detail::check_shape(cache_size >= 1, "config: cache_size must be >= 1");
  detail::check_shape(chunk_len >= 1, "config: chunk_len must be >= 1");
  detail::check_shape(denoiser_layers >= 1, "config: denoiser_layers must be >= 1");
  detail::check_shape(mlp_ratio >= 1, "config: mlp_ratio must be >= 1");
  detail::check_shape(diffusion_steps >= 1, "config: diffusion_steps must be >= 1");
  detail::check_shape(beta_start > 0 && beta_start < beta_end && beta_end < 1,
                      "config: need 0 < beta_start < beta_end < 1");
  detail::check_shape(dropout >= 0.0 && dropout < 1.0, "config: dropout must be in [0, 1)");
  detail::check_shape(subsample_ratio >= 1, "config: subsample_ratio must be >= 1");
  detail::check_shape(batch_size >= 1, "config: batch_size must be >= 1");
  detail::check_shape(gradient_steps >= 0, "config: gradient_steps must be >= 0");
  detail::check_shape(ema_rate > 0.0 && ema_rate < 1.0, "config: ema_rate must be in (0, 1)");
  detail::check_shape(eval_episodes >= 1, "config: eval_episodes must be >= 1");
  detail::check_shape(num_demos >= 1, "config: num_demos must be >= 1");
  detail::check_shape(!(zero_episodic && window_only),
                      "config: zero_episodic and window_only are mutually exclusive");
  cache_policy_from_string(policy);  // throws on unknown names
}

uint64_t RunConfig::config_hash() const {
  const std::string dump = to_json().dump();
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace edp
