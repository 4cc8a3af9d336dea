#pragma once

#include <string>
#include <vector>

#include "edp/dataset.hpp"
#include "edp/model.hpp"

namespace edp {

struct TrainMetricsRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  bool ok = true;
  std::string error;
  std::vector<TrainMetricsRow> rows;
  std::vector<std::vector<double>> ema_shadow;
};

// Working-memory block for one training sample: the last window_len frames
// of the prefix, front-padded with frame 0.
Tensor window_for_sample(const PolicyModel& model, const Trajectory& traj, int t);

// Episodic memory for one training sample: subsample the out-of-window
// range, encode + stamp the selected frames (detached), and fold them
// through the compressor on a fresh memory state. Returns the null block
// when nothing is selected. `final_state`, when given, receives the
// post-consolidation memory state (used by the gradient checker).
Tensor episodic_for_sample(const PolicyModel& model, const Trajectory& traj, int t,
                           SubsampleMode mode, Rng* subsample_rng, uint64_t memstate_seed,
                           MemoryState* final_state = nullptr);

// Behavior-cloning loop: per step, draw a bucketed batch, rebuild each
// sample's memory (with memory-token dropout), average the denoising
// losses, and apply one AdamW + EMA update. Metrics are recorded every
// step; checkpoints go to checkpoint_path (if non-empty) every
// cfg.checkpoint_every steps and at the end. A non-finite loss aborts the
// run and leaves the last written checkpoint in place.
TrainResult train_run(const RunConfig& cfg, const DemoDataset& dataset, PolicyModel& model,
                      const std::string& checkpoint_path = {});

}  // namespace edp
