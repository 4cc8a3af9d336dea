#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edp/envs.hpp"
#include "edp/rng.hpp"

namespace edp {

struct Trajectory {
  std::vector<std::vector<double>> observations;  // one per step, length T
  std::vector<std::vector<double>> actions;       // action taken after each observation
  bool success = false;

  int length() const { return static_cast<int>(observations.size()); }
};

struct DemoDataset {
  std::string task;
  int obs_dim = 0;
  int act_dim = 0;
  uint64_t seed = 0;
  double noise_level = 0.0;
  std::vector<Trajectory> trajectories;
};

// Rolls out the scripted expert until `count` successful episodes are
// collected; failures are discarded and re-drawn. Aborts if the success
// rate over 4*count attempts falls below one half.
DemoDataset generate_dataset(const EnvSpec& spec, int count, uint64_t seed,
                             double noise_level);

// Line-oriented file: a JSON header object on line 1, then one JSON object
// per trajectory. Parse errors name the offending line.
void save_dataset(const DemoDataset& dataset, const std::string& path);
DemoDataset load_dataset(const std::string& path);

enum class SubsampleMode { train, infer };

// Splits the out-of-window index range [0, len) into ceil(len/ratio)
// contiguous segments. Train mode picks one uniform index per segment;
// infer mode deterministically keeps indices with tau % ratio == ratio-1
// (each full segment's last frame), matching what a streaming consumer
// sees when it compresses frames as they leave the window.
std::vector<int> subsample_history(int len, int ratio, SubsampleMode mode, Rng* rng);

// One (trajectory, decision step) pair; the chunk target starts at t.
struct SampleRef {
  int trajectory = 0;
  int t = 0;
};

struct TrainingBatch {
  int history_segments = 0;  // ceil(out_of_window_len / ratio), shared in batch
  int max_history_len = 0;   // longest out-of-window prefix in the batch
  std::vector<SampleRef> items;
};

// Buckets every (trajectory, t) sample by subsampled-history length,
// shuffles bucket and in-bucket order, and cuts batches of at most
// batch_size. Every sample appears exactly once per call.
std::vector<TrainingBatch> make_batches(const DemoDataset& dataset, int batch_size,
                                        int ratio, int window_len, Rng& rng);

int out_of_window_len(int t, int window_len);

// Index into the front-padded prefix of a sample: indices below pad map to
// frame 0. pad = batch.max_history_len - own_history_len.
const std::vector<double>& padded_frame(const Trajectory& traj, int pad, int index);

// Expert action chunk a_{t..t+H-1}; the tail repeats the final action.
std::vector<std::vector<double>> chunk_at(const Trajectory& traj, int t, int horizon);

}  // namespace edp
