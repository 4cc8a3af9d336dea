#pragma once

#include <vector>

#include "edp/encoder.hpp"
#include "edp/memory.hpp"
#include "edp/optim.hpp"
#include "edp/rng.hpp"
#include "edp/tensor.hpp"

namespace edp {

struct CompressorBlockParams {
  Tensor ln1_g, ln1_b;        // pre-norm before self-attention
  Tensor q_s, k_s, v_s;       // self-attention projections over the summary cache
  Tensor ln2_g, ln2_b;        // pre-norm before cross-attention
  Tensor q_c, k_c, v_c;       // cross-attention projections over the observation cache
  Tensor ln3_g, ln3_b;        // pre-norm before the feed-forward
  Tensor w1, b1, w2, b2;
};

// Recursive consolidation network: per step, each block snapshots its input
// queries into that block's summary cache, self-attends over the cache,
// cross-attends over the observation cache, and feeds forward; a head MLP
// projects the last block's output into the episodic memory tokens.
struct CompressorParams {
  Tensor init_queries;  // MxD, trainable; the first block's input every step
  std::vector<CompressorBlockParams> blocks;
  MlpParams head;
  int embed_dim = 0;
  int memory_tokens = 0;

  static CompressorParams init(int embed_dim, int memory_tokens, int num_blocks,
                               int mlp_hidden, Rng& rng);
  void register_params(ParamSet& ps) const;
};

// All-zero episodic memory: used before any frame has left the window.
Tensor null_memory(int memory_tokens, int embed_dim);

// One consolidation step for a PE-stamped frame. The frame and each block's
// input queries enter the caches as detached value copies before being
// attended to, so no gradient flows into past steps through the caches.
// Timesteps must be strictly increasing within an episode.
Tensor compress_step(const Tensor& frame, int timestep, MemoryState& mem,
                     const CompressorParams& params);

// Recomputes the live query chain against a frozen post-insertion state
// without touching any cache. Used by finite-difference checks, where the
// cache contents must be held fixed to match the detachment semantics.
Tensor compress_replay(const MemoryState& mem, const CompressorParams& params);

// Train-time zeroing of whole memory tokens; survivors are rescaled so the
// expectation is unchanged. Identity when train_mode is false.
Tensor episodic_dropout(const Tensor& episodic, double p, bool train_mode, Rng& rng);

struct HistoryFrame {
  Tensor values;  // 1xD, already PE-stamped
  int timestep = 0;
};

// Sequential consolidation of an out-of-window frame list into `mem`
// (normally fresh). Returns the final episodic memory, or the null block
// for an empty list. With record_final_only, all but the last step run
// outside the active tape; the result is gradient-identical because cache
// writes are detached either way.
Tensor run_history(const std::vector<HistoryFrame>& frames, const CompressorParams& params,
                   MemoryState& mem, bool record_final_only = false);

}  // namespace edp
