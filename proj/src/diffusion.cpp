#include "edp/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "edp/encoder.hpp"
#include "edp/ops.hpp"

namespace edp {

namespace {

Tensor filled_param(int rows, int cols, double value) {
  Tensor t(rows, cols, true);
  for (double& v : t.values()) v = value;
  return t;
}

// Fixed sinusoidal stamps for row positions (action slots, condition roles).
Tensor position_stamps(int rows, int dim) {
  Tensor t(rows, dim);
  for (int r = 0; r < rows; ++r) {
    const std::vector<double> pe = positional_embedding(r, dim);
    for (int j = 0; j < dim; ++j) t.at(r, j) = pe[static_cast<size_t>(j)];
  }
  return t;
}

}  // namespace

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  detail::check_shape(steps >= 1, "schedule needs at least one step");
  detail::check_shape(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0,
                      "schedule requires 0 < beta_start < beta_end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(static_cast<size_t>(steps));
  s.alpha.resize(static_cast<size_t>(steps));
  s.alpha_bar.resize(static_cast<size_t>(steps));
  s.sigma.resize(static_cast<size_t>(steps));
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    s.beta[static_cast<size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[static_cast<size_t>(i)] = 1.0 - s.beta[static_cast<size_t>(i)];
    prod *= s.alpha[static_cast<size_t>(i)];
    s.alpha_bar[static_cast<size_t>(i)] = prod;
    s.sigma[static_cast<size_t>(i)] = i == 0 ? 0.0 : std::sqrt(s.beta[static_cast<size_t>(i)]);
  }
  return s;
}

Tensor add_noise(const Tensor& a0, int k, const Tensor& eps, const NoiseSchedule& sched) {
  detail::check_shape(k >= 1 && k <= sched.steps, "add_noise: k out of range");
  detail::check_shape(a0.same_shape(eps), "add_noise: noise shape mismatch");
  const double ab = sched.alpha_bar_at(k);
  const double c0 = std::sqrt(ab);
  const double c1 = std::sqrt(1.0 - ab);
  Tensor out(a0.rows(), a0.cols());
  for (size_t i = 0; i < out.values().size(); ++i)
    out.values()[i] = c0 * a0.values()[i] + c1 * eps.values()[i];
  return out;
}

DenoiserParams DenoiserParams::init(int embed_dim, int act_dim, int chunk_len, int depth,
                                    int diffusion_steps, int mlp_hidden, Rng& rng) {
  detail::check_shape(depth >= 1, "denoiser needs at least one block");
  DenoiserParams p;
  p.embed_dim = embed_dim;
  p.act_dim = act_dim;
  p.chunk_len = chunk_len;
  const double ba = 1.0 / std::sqrt(static_cast<double>(act_dim));
  const double bd = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  const double bh = 1.0 / std::sqrt(static_cast<double>(mlp_hidden));
  p.act_embed_w = Tensor::uniform_init(act_dim, embed_dim, ba, rng);
  p.act_embed_b = Tensor::uniform_init(1, embed_dim, ba, rng);
  p.time_table = Tensor::uniform_init(diffusion_steps, embed_dim, bd, rng);
  for (int n = 0; n < depth; ++n) {
    DenoiserBlockParams b;
    b.ln1_g = filled_param(1, embed_dim, 1.0);
    b.ln1_b = filled_param(1, embed_dim, 0.0);
    b.ln2_g = filled_param(1, embed_dim, 1.0);
    b.ln2_b = filled_param(1, embed_dim, 0.0);
    b.ln3_g = filled_param(1, embed_dim, 1.0);
    b.ln3_b = filled_param(1, embed_dim, 0.0);
    for (Tensor* t : {&b.sq, &b.sk, &b.sv, &b.so, &b.cq, &b.ck, &b.cv, &b.co})
      *t = Tensor::uniform_init(embed_dim, embed_dim, bd, rng);
    b.w1 = Tensor::uniform_init(embed_dim, mlp_hidden, bd, rng);
    b.b1 = Tensor::uniform_init(1, mlp_hidden, bd, rng);
    b.w2 = Tensor::uniform_init(mlp_hidden, embed_dim, bh, rng);
    b.b2 = Tensor::uniform_init(1, embed_dim, bh, rng);
    p.blocks.push_back(b);
  }
  p.lnf_g = filled_param(1, embed_dim, 1.0);
  p.lnf_b = filled_param(1, embed_dim, 0.0);
  p.head_w = Tensor::uniform_init(embed_dim, act_dim, bd, rng);
  p.head_b = Tensor::uniform_init(1, act_dim, bd, rng);
  return p;
}

void DenoiserParams::register_params(ParamSet& ps) const {
  ps.add("act_embed_w", act_embed_w);
  ps.add("act_embed_b", act_embed_b);
  ps.add("time_table", time_table);
  for (size_t n = 0; n < blocks.size(); ++n) {
    const std::string pre = "block" + std::to_string(n) + ".";
    const DenoiserBlockParams& b = blocks[n];
    ps.add(pre + "ln1_g", b.ln1_g);
    ps.add(pre + "ln1_b", b.ln1_b);
    ps.add(pre + "sq", b.sq);
    ps.add(pre + "sk", b.sk);
    ps.add(pre + "sv", b.sv);
    ps.add(pre + "so", b.so);
    ps.add(pre + "ln2_g", b.ln2_g);
    ps.add(pre + "ln2_b", b.ln2_b);
    ps.add(pre + "cq", b.cq);
    ps.add(pre + "ck", b.ck);
    ps.add(pre + "cv", b.cv);
    ps.add(pre + "co", b.co);
    ps.add(pre + "ln3_g", b.ln3_g);
    ps.add(pre + "ln3_b", b.ln3_b);
    ps.add(pre + "w1", b.w1);
    ps.add(pre + "b1", b.b1);
    ps.add(pre + "w2", b.w2);
    ps.add(pre + "b2", b.b2);
  }
  ps.add("lnf_g", lnf_g);
  ps.add("lnf_b", lnf_b);
  ps.add("head_w", head_w);
  ps.add("head_b", head_b);
}

Tensor predict_noise(const Tensor& noisy_chunk, const Tensor& window, const Tensor& episodic,
                     int k, const DenoiserParams& params) {
  detail::check_shape(noisy_chunk.cols() == params.act_dim,
                      "predict_noise: action width mismatch");
  detail::check_shape(window.cols() == params.embed_dim,
                      "predict_noise: window token width mismatch");
  detail::check_shape(k >= 1 && k <= params.time_table.rows(),
                      "predict_noise: k out of range");

  Tensor x = affine(noisy_chunk, params.act_embed_w, params.act_embed_b);
  x = add(x, position_stamps(x.rows(), params.embed_dim));

  std::vector<Tensor> cond_rows = {take_row(params.time_table, k - 1), window};
  if (episodic.defined()) {
    detail::check_shape(episodic.cols() == params.embed_dim,
                        "predict_noise: episodic token width mismatch");
    cond_rows.push_back(episodic);
  }
  Tensor cond = concat_rows(cond_rows);
  cond = add(cond, position_stamps(cond.rows(), params.embed_dim));

  for (const DenoiserBlockParams& b : params.blocks) {
    Tensor xa = layer_norm(x, b.ln1_g, b.ln1_b);
    x = add(x, matmul(scaled_dot_attention(matmul(xa, b.sq), matmul(xa, b.sk), matmul(xa, b.sv)),
                      b.so));
    Tensor xc = layer_norm(x, b.ln2_g, b.ln2_b);
    x = add(x, matmul(scaled_dot_attention(matmul(xc, b.cq), matmul(cond, b.ck),
                                           matmul(cond, b.cv)),
                      b.co));
    Tensor xm = layer_norm(x, b.ln3_g, b.ln3_b);
    x = add(x, mlp_forward(xm, b.w1, b.b1, b.w2, b.b2, Activation::gelu));
  }
  return affine(layer_norm(x, params.lnf_g, params.lnf_b), params.head_w, params.head_b);
}

Tensor training_loss_at(const Tensor& window, const Tensor& episodic, const Tensor& a0,
                        int k, const Tensor& eps, const NoiseSchedule& sched,
                        const DenoiserParams& params) {
  Tensor noisy = add_noise(a0, k, eps, sched);
  Tensor pred = predict_noise(noisy, window, episodic, k, params);
  return mse_loss(pred, eps);
}

Tensor training_loss(const Tensor& window, const Tensor& episodic, const Tensor& a0,
                     const NoiseSchedule& sched, const DenoiserParams& params, Rng& rng) {
  const int k = rng.uniform_int(1, sched.steps);
  Tensor eps(a0.rows(), a0.cols());
  for (double& v : eps.values()) v = rng.normal();
  return training_loss_at(window, episodic, a0, k, eps, sched, params);
}

Tensor sample_chunk_with(const NoisePredictor& predict, const NoiseSchedule& sched,
                         int chunk_len, int act_dim, Rng& rng) {
  Tensor a(chunk_len, act_dim);
  for (double& v : a.values()) v = rng.normal();
  for (int k = sched.steps; k >= 1; --k) {
    Tensor eps = predict(a, k);
    detail::check_shape(eps.same_shape(a), "sampler: predictor shape mismatch");
    const double alpha = sched.alpha_at(k);
    const double ab = sched.alpha_bar_at(k);
    const double c = (1.0 - alpha) / std::sqrt(1.0 - ab);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double sigma = sched.sigma_at(k);
    for (size_t i = 0; i < a.values().size(); ++i) {
      double v = inv_sqrt_alpha * (a.values()[i] - c * eps.values()[i]);
      if (k > 1) v += sigma * rng.normal();
      if (!std::isfinite(v))
        throw std::runtime_error("edp: sampler diverged (non-finite value at step k=" +
                                 std::to_string(k) + ")");
      a.values()[i] = v;
    }
  }
  return a;
}

Tensor sample_chunk(const Tensor& window, const Tensor& episodic, const NoiseSchedule& sched,
                    const DenoiserParams& params, Rng& rng) {
  NoTapeGuard guard;
  return sample_chunk_with(
      [&](const Tensor& noisy, int k) {
        return predict_noise(noisy, window, episodic, k, params);
      },
      sched, params.chunk_len, params.act_dim, rng);
}

}  // namespace edp
