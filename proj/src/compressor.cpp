#include "edp/compressor.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "edp/ops.hpp"

namespace edp {

namespace {

// Trainable tensor filled with a constant (layer-norm gains/biases).
Tensor filled_param(int rows, int cols, double value) {
  Tensor t(rows, cols, true);
  for (double& v : t.values()) v = value;
  return t;
}

MlpParams init_mlp(int in_dim, int hidden, int out_dim, Rng& rng) {
  MlpParams p;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w1 = Tensor::uniform_init(in_dim, hidden, b1, rng);
  p.b1 = Tensor::uniform_init(1, hidden, b1, rng);
  p.w2 = Tensor::uniform_init(hidden, out_dim, b2, rng);
  p.b2 = Tensor::uniform_init(1, out_dim, b2, rng);
  return p;
}

// Constant tensor view of a cache; payloads may be 1xD rows or MxD blocks
// that get stacked into (size * M) x D keys.
Tensor cache_tensor(const TokenCache& cache, int embed_dim) {
  const std::vector<CacheEntry>& entries = cache.entries();
  detail::check_contract(!entries.empty(), "attention over an empty cache");
  const int rows_per_entry = static_cast<int>(entries[0].payload.size()) / embed_dim;
  Tensor out(static_cast<int>(entries.size()) * rows_per_entry, embed_dim);
  size_t off = 0;
  for (const CacheEntry& e : entries) {
    for (double v : e.payload) out.values()[off++] = v;
  }
  return out;
}

Tensor block_forward(const Tensor& x_in, const CompressorBlockParams& b, const Tensor& summary,
                     const Tensor& observations) {
  Tensor qn = layer_norm(x_in, b.ln1_g, b.ln1_b);
  Tensor x = add(x_in, scaled_dot_attention(matmul(qn, b.q_s), matmul(summary, b.k_s),
                                            matmul(summary, b.v_s)));
  Tensor x1 = layer_norm(x, b.ln2_g, b.ln2_b);
  x = add(x, scaled_dot_attention(matmul(x1, b.q_c), matmul(observations, b.k_c),
                                  matmul(observations, b.v_c)));
  Tensor x2 = layer_norm(x, b.ln3_g, b.ln3_b);
  return add(x, mlp_forward(x2, b.w1, b.b1, b.w2, b.b2, Activation::gelu));
}

Tensor compress_core(MemoryState* mutate, const MemoryState& read, const CompressorParams& P,
                     int timestep) {
  Tensor observations = cache_tensor(read.obs_cache, P.embed_dim);
  Tensor x = P.init_queries;
  for (size_t n = 0; n < P.blocks.size(); ++n) {
    if (mutate != nullptr) {
      mutate->summary_caches[n].insert(timestep, x.values());  // detached snapshot
    }
    Tensor summary = cache_tensor(read.summary_caches[n], P.embed_dim);
    x = block_forward(x, P.blocks[n], summary, observations);
  }
  return mlp_forward(x, P.head.w1, P.head.b1, P.head.w2, P.head.b2, Activation::gelu);
}

}  // namespace

CompressorParams CompressorParams::init(int embed_dim, int memory_tokens, int num_blocks,
                                        int mlp_hidden, Rng& rng) {
  detail::check_shape(embed_dim > 0 && memory_tokens > 0 && num_blocks > 0,
                      "compressor dims must be positive");
  CompressorParams p;
  p.embed_dim = embed_dim;
  p.memory_tokens = memory_tokens;
  const double bound = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  p.init_queries = Tensor::uniform_init(memory_tokens, embed_dim, bound, rng);
  for (int n = 0; n < num_blocks; ++n) {
    CompressorBlockParams b;
    b.ln1_g = filled_param(1, embed_dim, 1.0);
    b.ln1_b = filled_param(1, embed_dim, 0.0);
    b.ln2_g = filled_param(1, embed_dim, 1.0);
    b.ln2_b = filled_param(1, embed_dim, 0.0);
    b.ln3_g = filled_param(1, embed_dim, 1.0);
    b.ln3_b = filled_param(1, embed_dim, 0.0);
    b.q_s = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    b.k_s = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    b.v_s = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    b.q_c = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    b.k_c = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    b.v_c = Tensor::uniform_init(embed_dim, embed_dim, bound, rng);
    MlpParams mlp = init_mlp(embed_dim, mlp_hidden, embed_dim, rng);
    b.w1 = mlp.w1;
    b.b1 = mlp.b1;
    b.w2 = mlp.w2;
    b.b2 = mlp.b2;
    p.blocks.push_back(b);
  }
  p.head = init_mlp(embed_dim, mlp_hidden, embed_dim, rng);
  return p;
}

void CompressorParams::register_params(ParamSet& ps) const {
  ps.add("q", init_queries);
  for (size_t n = 0; n < blocks.size(); ++n) {
    const std::string pre = "block" + std::to_string(n) + ".";
    const CompressorBlockParams& b = blocks[n];
    ps.add(pre + "ln1_g", b.ln1_g);
    ps.add(pre + "ln1_b", b.ln1_b);
    ps.add(pre + "q_s", b.q_s);
    ps.add(pre + "k_s", b.k_s);
    ps.add(pre + "v_s", b.v_s);
    ps.add(pre + "ln2_g", b.ln2_g);
    ps.add(pre + "ln2_b", b.ln2_b);
    ps.add(pre + "q_c", b.q_c);
    ps.add(pre + "k_c", b.k_c);
    ps.add(pre + "v_c", b.v_c);
    ps.add(pre + "ln3_g", b.ln3_g);
    ps.add(pre + "ln3_b", b.ln3_b);
    ps.add(pre + "w1", b.w1);
    ps.add(pre + "b1", b.b1);
    ps.add(pre + "w2", b.w2);
    ps.add(pre + "b2", b.b2);
  }
  ps.add("head.w1", head.w1);
  ps.add("head.b1", head.b1);
  ps.add("head.w2", head.w2);
  ps.add("head.b2", head.b2);
}

Tensor null_memory(int memory_tokens, int embed_dim) {
  return Tensor::zeros(memory_tokens, embed_dim);
}

Tensor compress_step(const Tensor& frame, int timestep, MemoryState& mem,
                     const CompressorParams& params) {
  detail::check_shape(frame.rows() == 1 && frame.cols() == params.embed_dim,
                      "compress_step: frame must be 1 x embed_dim");
  detail::check_contract(!mem.last_compressed || timestep > *mem.last_compressed,
                         "compress_step: timestep must increase within an episode");
  mem.obs_cache.insert(timestep, frame.values());  // detached value copy
  Tensor e = compress_core(&mem, mem, params, timestep);
  mem.episodic = e.values();
  mem.last_compressed = timestep;
  return e;
}

Tensor compress_replay(const MemoryState& mem, const CompressorParams& params) {
  return compress_core(nullptr, mem, params, 0);
}

Tensor episodic_dropout(const Tensor& episodic, double p, bool train_mode, Rng& rng) {
  detail::check_shape(p >= 0.0 && p < 1.0, "dropout ratio must lie in [0, 1)");
  if (!train_mode || p == 0.0) return episodic;
  std::vector<double> factors(static_cast<size_t>(episodic.rows()));
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& f : factors) f = rng.uniform() < p ? 0.0 : keep_scale;
  return row_scale(episodic, factors);
}

Tensor run_history(const std::vector<HistoryFrame>& frames, const CompressorParams& params,
                   MemoryState& mem, bool record_final_only) {
  for (size_t i = 1; i < frames.size(); ++i)
    detail::check_contract(frames[i].timestep > frames[i - 1].timestep,
                           "run_history: frames must be sorted by timestep");
  if (frames.empty()) return null_memory(params.memory_tokens, params.embed_dim);
  {
    std::optional<NoTapeGuard> guard;
    if (record_final_only) guard.emplace();
    for (size_t i = 0; i + 1 < frames.size(); ++i)
      compress_step(frames[i].values, frames[i].timestep, mem, params);
  }
  return compress_step(frames.back().values, frames.back().timestep, mem, params);
}

}  // namespace edp
