#include "edp/encoder.hpp"

#include <cmath>
#include <string>

#include "edp/ops.hpp"

namespace edp {

namespace {

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

void register_mlp(ParamSet& ps, const std::string& prefix, const MlpParams& p) {
  ps.add(prefix + ".w1", p.w1);
  ps.add(prefix + ".b1", p.b1);
  ps.add(prefix + ".w2", p.w2);
  ps.add(prefix + ".b2", p.b2);
}

}  // namespace

std::vector<double> positional_embedding(int timestep, int dim) {
  detail::check_shape(timestep >= 0, "positional_embedding: timestep must be >= 0");
  detail::check_shape(dim > 0 && dim % 2 == 0, "positional_embedding: dim must be even");
  std::vector<double> out(static_cast<size_t>(dim));
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
    const double angle = timestep * freq;
    out[static_cast<size_t>(2 * i)] = std::sin(angle);
    out[static_cast<size_t>(2 * i + 1)] = std::cos(angle);
  }
  return out;
}

FrameEncoder FrameEncoder::init(const std::vector<int>& modality_dims, int embed_dim, Rng& rng) {
  detail::check_shape(!modality_dims.empty(), "encoder needs at least one modality");
  FrameEncoder enc;
  enc.modality_dims_ = modality_dims;
  enc.embed_dim_ = embed_dim;
  for (int dim : modality_dims)
    enc.modality_mlps_.push_back(init_mlp(dim, embed_dim, embed_dim, rng));
  const int joint_in = embed_dim * static_cast<int>(modality_dims.size());
  enc.joint_ = init_mlp(joint_in, embed_dim, embed_dim, rng);
  return enc;
}

Tensor FrameEncoder::encode_rows(const std::vector<Tensor>& modality_rows) const {
  detail::check_shape(modality_rows.size() == modality_mlps_.size(),
                      "encode: modality count mismatch");
  std::vector<Tensor> embeds;
  embeds.reserve(modality_rows.size());
  for (size_t m = 0; m < modality_rows.size(); ++m) {
    detail::check_shape(modality_rows[m].rows() == 1 &&
                            modality_rows[m].cols() == modality_dims_[m],
                        "encode: modality " + std::to_string(m) + " has wrong width");
    const MlpParams& p = modality_mlps_[m];
    embeds.push_back(mlp_forward(modality_rows[m], p.w1, p.b1, p.w2, p.b2, Activation::gelu));
  }
  Tensor joint_in = embeds.size() == 1 ? embeds[0] : concat_cols(embeds);
  return mlp_forward(joint_in, joint_.w1, joint_.b1, joint_.w2, joint_.b2, Activation::gelu);
}

ObservationToken FrameEncoder::encode(const RawObservation& raw) const {
  std::vector<Tensor> rows;
  rows.reserve(raw.modalities.size());
  for (const std::vector<double>& m : raw.modalities) rows.push_back(Tensor::row(m));
  return ObservationToken{encode_rows(rows), raw.timestep};
}

void FrameEncoder::register_params(ParamSet& ps) const {
  for (size_t m = 0; m < modality_mlps_.size(); ++m)
    register_mlp(ps, "modality" + std::to_string(m), modality_mlps_[m]);
  register_mlp(ps, "joint", joint_);
}

Tensor stamp_out_of_window(const ObservationToken& token) {
  const int dim = token.values.cols();
  Tensor pe = Tensor::row(positional_embedding(token.timestep, dim));
  return add(token.values, pe);
}

}  // namespace edp
