#pragma once

#include <functional>
#include <vector>

#include "edp/optim.hpp"
#include "edp/rng.hpp"
#include "edp/tensor.hpp"

namespace edp {

// Linear-beta DDPM tables, 1-indexed by denoising step k (stored at k-1).
// sigma_1 = 0 so the final denoising step is deterministic.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  static NoiseSchedule linear(int steps, double beta_start, double beta_end);

  double beta_at(int k) const { return beta[static_cast<size_t>(k - 1)]; }
  double alpha_at(int k) const { return alpha[static_cast<size_t>(k - 1)]; }
  double alpha_bar_at(int k) const { return alpha_bar[static_cast<size_t>(k - 1)]; }
  double sigma_at(int k) const { return sigma[static_cast<size_t>(k - 1)]; }
};

// a_k = sqrt(alpha_bar_k) a0 + sqrt(1 - alpha_bar_k) eps, as a constant tensor.
Tensor add_noise(const Tensor& a0, int k, const Tensor& eps, const NoiseSchedule& sched);

struct DenoiserBlockParams {
  Tensor ln1_g, ln1_b;
  Tensor sq, sk, sv, so;  // self-attention over the action tokens
  Tensor ln2_g, ln2_b;
  Tensor cq, ck, cv, co;  // cross-attention over the condition tokens
  Tensor ln3_g, ln3_b;
  Tensor w1, b1, w2, b2;
};

// Transformer-decoder noise predictor. Action rows are embedded and stamped
// with fixed sinusoidal slot embeddings; the condition block is
// [timestep-embedding; window tokens; episodic tokens], each row stamped
// with a fixed sinusoidal role embedding so attention can tell them apart.
struct DenoiserParams {
  Tensor act_embed_w, act_embed_b;  // act_dim -> D
  Tensor time_table;                // K x D, learned; row k-1 embeds step k
  std::vector<DenoiserBlockParams> blocks;
  Tensor lnf_g, lnf_b;
  Tensor head_w, head_b;  // D -> act_dim
  int embed_dim = 0;
  int act_dim = 0;
  int chunk_len = 0;

  static DenoiserParams init(int embed_dim, int act_dim, int chunk_len, int depth,
                             int diffusion_steps, int mlp_hidden, Rng& rng);
  void register_params(ParamSet& ps) const;
};

// episodic may be undefined (window-only conditioning drops those rows).
Tensor predict_noise(const Tensor& noisy_chunk, const Tensor& window, const Tensor& episodic,
                     int k, const DenoiserParams& params);

// Deterministic inner loss: mse(eps, predict(add_noise(a0, k, eps), ...)).
Tensor training_loss_at(const Tensor& window, const Tensor& episodic, const Tensor& a0,
                        int k, const Tensor& eps, const NoiseSchedule& sched,
                        const DenoiserParams& params);

// Draws k uniform in [1, K] and eps standard normal, then training_loss_at.
Tensor training_loss(const Tensor& window, const Tensor& episodic, const Tensor& a0,
                     const NoiseSchedule& sched, const DenoiserParams& params, Rng& rng);

using NoisePredictor = std::function<Tensor(const Tensor& noisy_chunk, int k)>;

// K-step ancestral sampler with injectable predictor (the production entry
// point binds predict_noise; tests substitute oracles). Throws on
// non-finite intermediate values.
Tensor sample_chunk_with(const NoisePredictor& predict, const NoiseSchedule& sched,
                         int chunk_len, int act_dim, Rng& rng);

Tensor sample_chunk(const Tensor& window, const Tensor& episodic, const NoiseSchedule& sched,
                    const DenoiserParams& params, Rng& rng);

}  // namespace edp
