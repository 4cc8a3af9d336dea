#include "edp/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "edp/ops.hpp"

namespace edp {

namespace {

Tensor window_tensor(const WorkingWindow& window, const std::vector<double>& frame0,
                     int window_len, int embed_dim) {
  Tensor out(window_len, embed_dim);
  const int pad = window_len - static_cast<int>(window.size());
  for (int i = 0; i < window_len; ++i) {
    const std::vector<double>& src =
        i < pad ? frame0 : window.entries()[static_cast<size_t>(i - pad)].payload;
    for (int j = 0; j < embed_dim; ++j) out.at(i, j) = src[static_cast<size_t>(j)];
  }
  return out;
}

// Per-episode decision loop state.
struct EpisodeRunner {
  const PolicyModel& model;
  const RunConfig& cfg;
  MemoryState state;
  Rng chunk_rng;
  Tensor episodic;
  std::vector<double> frame0;
  Tensor chunk;
  int chunk_base = 0;
  int t = 0;
  bool sample_actions = true;  // replay runs skip the sampler

  EpisodeRunner(const PolicyModel& m, const RunConfig& c, uint64_t mem_seed,
                uint64_t chunk_seed)
      : model(m),
        cfg(c),
        state(MemoryState::make(static_cast<size_t>(c.window_len),
                                static_cast<size_t>(c.cache_size), c.embed_dim,
                                c.memory_tokens, c.compressor_layers,
                                cache_policy_from_string(c.policy), mem_seed)),
        chunk_rng(chunk_seed),
        episodic(null_memory(c.memory_tokens, c.embed_dim)) {}

  // Encode the frame, update window and caches, and (on replan steps)
  // sample a fresh action chunk. Returns the action to execute.
  std::vector<double> decide(const std::vector<double>& obs) {
    const ObservationToken token =
        model.encoder.encode(split_observation(model.env_spec, obs, t));
    if (t == 0) frame0 = token.values.values();
    const std::optional<CacheEntry> evicted = state.window.push(t, token.values.values());
    const bool compress_enabled = !cfg.zero_episodic && !cfg.window_only;
    if (evicted && compress_enabled &&
        evicted->timestep % cfg.subsample_ratio == cfg.subsample_ratio - 1) {
      const Tensor frame =
          stamp_out_of_window(ObservationToken{Tensor::row(evicted->payload), evicted->timestep});
      episodic = compress_step(frame, evicted->timestep, state, model.compressor);
    }
    if (sample_actions && t % cfg.effective_replan() == 0) {
      const Tensor window = window_tensor(state.window, frame0, cfg.window_len, cfg.embed_dim);
      Tensor cond_episodic;
      if (!cfg.window_only)
        cond_episodic = cfg.zero_episodic
                            ? null_memory(cfg.memory_tokens, cfg.embed_dim)
                            : episodic;
      chunk = sample_chunk(window, cond_episodic, model.schedule, model.denoiser, chunk_rng);
      chunk_base = t;
    }
    std::vector<double> action(static_cast<size_t>(model.env_spec.act_dim), 0.0);
    if (sample_actions) action = model.normalizer.denormalize_row(chunk, t - chunk_base);
    ++t;
    return action;
  }
};

}  // namespace

EvalResult evaluate(const PolicyModel& model, const RunConfig& cfg, const EvalOptions& opts) {
  NoTapeGuard guard;
  detail::check_shape(cfg.effective_replan() <= cfg.chunk_len,
                      "evaluate: replan_interval must not exceed chunk_len");
  const int episodes =
      opts.replay != nullptr
          ? 1
          : (opts.episodes_override > 0 ? opts.episodes_override : cfg.eval_episodes);

  int successes = 0;
  double length_sum = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    ToyEnv env(model.env_spec);
    std::vector<double> obs =
        opts.replay != nullptr
            ? env.reset_from_observation(opts.replay->observations.front())
            : env.reset(Rng::mix(cfg.seed, 0xEAA00000ULL + static_cast<uint64_t>(ep)));
    EpisodeRunner runner(model, cfg, Rng::mix(cfg.seed, 0x3E300000ULL + static_cast<uint64_t>(ep)),
                         Rng::mix(cfg.seed, 0xC4A00000ULL + static_cast<uint64_t>(ep)));
    runner.sample_actions = opts.replay == nullptr;
    while (!env.done()) {
      if (opts.replay != nullptr &&
          runner.t >= static_cast<int>(opts.replay->actions.size()))
        break;
      std::vector<double> action = runner.decide(obs);
      if (opts.replay != nullptr)
        action = opts.replay->actions[static_cast<size_t>(runner.t - 1)];
      if (opts.episodic_trace != nullptr && ep == 0)
        opts.episodic_trace->push_back({runner.t - 1, runner.state.episodic});
      obs = env.step(action).obs;
    }
    successes += env.success() ? 1 : 0;
    length_sum += runner.t;
  }

  EvalResult result;
  result.task = model.env_spec.name;
  result.seed = cfg.seed;
  result.episodes = episodes;
  result.success_rate = static_cast<double>(successes) / episodes;
  result.mean_episode_len = length_sum / episodes;
  return result;
}

std::vector<BenchRow> bench_constant_cost(const PolicyModel& model, const RunConfig& cfg,
                                          const std::vector<int>& probe_steps, int repeats) {
  NoTapeGuard guard;
  detail::check_shape(!probe_steps.empty(), "bench: no probe steps");
  const int max_probe = *std::max_element(probe_steps.begin(), probe_steps.end());
  detail::check_shape(model.env_spec.episode_len > max_probe,
                      "bench: episode_len must exceed the largest probe step");

  // Replan every step so each probe times a full decision.
  RunConfig bench_cfg = cfg;
  bench_cfg.replan_interval = 1;

  ToyEnv env(model.env_spec);
  std::vector<double> obs = env.reset(Rng::mix(cfg.seed, 0xBE9C0000ULL));
  EpisodeRunner runner(model, bench_cfg, Rng::mix(cfg.seed, 1), Rng::mix(cfg.seed, 2));

  std::vector<BenchRow> rows;
  while (!env.done()) {
    const int t = runner.t;
    if (std::find(probe_steps.begin(), probe_steps.end(), t) != probe_steps.end()) {
      BenchRow row;
      row.probe_step = t;
      int tokens = static_cast<int>(runner.state.window.size()) +
                   static_cast<int>(runner.state.obs_cache.size());
      for (const TokenCache& c : runner.state.summary_caches)
        tokens += static_cast<int>(c.size()) * cfg.memory_tokens;
      row.tokens_live = tokens;

      std::vector<double> timings;
      timings.reserve(static_cast<size_t>(repeats));
      for (int rep = 0; rep < repeats; ++rep) {
        EpisodeRunner snapshot = runner;  // decisions run on a copy
        const auto start = std::chrono::steady_clock::now();
        (void)snapshot.decide(obs);
        const auto stop = std::chrono::steady_clock::now();
        timings.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
      }
      std::sort(timings.begin(), timings.end());
      row.ms_per_decision = timings[timings.size() / 2];
      rows.push_back(row);
    }
    obs = env.step(runner.decide(obs)).obs;
  }
  detail::check_shape(rows.size() == probe_steps.size(),
                      "bench: episode ended before all probes were reached");
  return rows;
}

}  // namespace edp
