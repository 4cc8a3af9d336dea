#pragma once

#include <string>
#include <vector>

#include "edp/compressor.hpp"
#include "edp/config.hpp"
#include "edp/dataset.hpp"
#include "edp/diffusion.hpp"
#include "edp/encoder.hpp"
#include "edp/envs.hpp"
#include "edp/optim.hpp"

namespace edp {

// Per-dimension min/max scaling of demonstration actions to [-1, 1].
struct Normalizer {
  std::vector<double> lo, hi;

  static Normalizer fit(const DemoDataset& dataset);
  static Normalizer identity(int act_dim);

  Tensor normalize_chunk(const std::vector<std::vector<double>>& chunk) const;
  std::vector<double> denormalize_row(const Tensor& chunk, int row) const;
};

// The trainable policy: frame encoder, memory compressor, and noise
// predictor, plus the fixed noise schedule and action normalizer.
struct PolicyModel {
  RunConfig cfg;
  EnvSpec env_spec;
  FrameEncoder encoder;
  CompressorParams compressor;
  DenoiserParams denoiser;
  NoiseSchedule schedule;
  Normalizer normalizer;
  ParamSet params;

  static PolicyModel init(const RunConfig& cfg, const EnvSpec& spec);
};

RawObservation split_observation(const EnvSpec& spec, const std::vector<double>& obs,
                                 int timestep);

// JSON checkpoint: config hash, normalizer, and per-group shapes with flat
// value/EMA arrays. Loading validates names and shapes against the model.
void save_checkpoint(const std::string& path, const PolicyModel& model,
                     const std::vector<std::vector<double>>& ema_shadow);
// Returns the EMA shadow in parameter order.
std::vector<std::vector<double>> load_checkpoint(const std::string& path, PolicyModel& model);

}  // namespace edp
