#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "edp/dataset.hpp"
#include "edp/model.hpp"

namespace edp {

struct EvalResult {
  std::string task;
  uint64_t seed = 0;
  int episodes = 0;
  double success_rate = 0.0;
  double mean_episode_len = 0.0;
};

struct EvalOptions {
  // Replays this trajectory's recorded actions instead of the policy
  // (single episode, env rebuilt from the recorded first observation).
  const Trajectory* replay = nullptr;
  // Receives (t, episodic values) after every step of the first episode.
  std::vector<std::pair<int, std::vector<double>>>* episodic_trace = nullptr;
  int episodes_override = 0;
};

// Streaming closed-loop evaluation: encode each new frame, slide the
// window, compress frames as they leave it (subject to the subsample
// stride), and resample an action chunk every replan interval.
EvalResult evaluate(const PolicyModel& model, const RunConfig& cfg,
                    const EvalOptions& opts = {});

struct BenchRow {
  int probe_step = 0;
  int tokens_live = 0;
  double ms_per_decision = 0.0;
};

// One long episode; at each probe step, reports the live token count
// (window + observation cache + summary caches) and the median wall time
// of a full decision step over `repeats` repetitions on a state snapshot.
std::vector<BenchRow> bench_constant_cost(const PolicyModel& model, const RunConfig& cfg,
                                          const std::vector<int>& probe_steps, int repeats);

}  // namespace edp
