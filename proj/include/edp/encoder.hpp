#pragma once

#include <vector>

#include "edp/optim.hpp"
#include "edp/rng.hpp"
#include "edp/tensor.hpp"

namespace edp {

// One raw environment frame: fixed-dimension modality vectors (proprioceptive
// pose, task features, ...) plus the episode timestep it was observed at.
struct RawObservation {
  std::vector<std::vector<double>> modalities;
  int timestep = 0;
};

// Encoded frame: a single 1xD token carrying its episode timestep.
struct ObservationToken {
  Tensor values;
  int timestep = 0;
};

// Fixed sinusoidal embedding; even slots sin, odd slots cos. dim must be even.
std::vector<double> positional_embedding(int timestep, int dim);

struct MlpParams {
  Tensor w1, b1, w2, b2;
};

// Per-modality MLP embeddings concatenated into a joint MLP. A pure
// function of (raw, params); all parameters live in tensors registered
// through register_params.
class FrameEncoder {
 public:
  static FrameEncoder init(const std::vector<int>& modality_dims, int embed_dim, Rng& rng);

  ObservationToken encode(const RawObservation& raw) const;
  // Differentiable path from modality rows; used where gradients w.r.t.
  // raw inputs are needed.
  Tensor encode_rows(const std::vector<Tensor>& modality_rows) const;

  void register_params(ParamSet& ps) const;

  int embed_dim() const { return embed_dim_; }
  const std::vector<int>& modality_dims() const { return modality_dims_; }

 private:
  std::vector<int> modality_dims_;
  int embed_dim_ = 0;
  std::vector<MlpParams> modality_mlps_;
  MlpParams joint_;
};

// f_tau = token + PE(tau); applied to tokens leaving the window before they
// enter the observation cache.
Tensor stamp_out_of_window(const ObservationToken& token);

}  // namespace edp
