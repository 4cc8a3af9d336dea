#include "edp/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace edp {

using nlohmann::json;

Normalizer Normalizer::fit(const DemoDataset& dataset) {
  Normalizer n;
  n.lo.assign(static_cast<size_t>(dataset.act_dim), 0.0);
  n.hi.assign(static_cast<size_t>(dataset.act_dim), 0.0);
  bool first = true;
  for (const Trajectory& traj : dataset.trajectories) {
    for (const std::vector<double>& a : traj.actions) {
      for (size_t d = 0; d < a.size(); ++d) {
        if (first) {
          n.lo[d] = n.hi[d] = a[d];
        } else {
          n.lo[d] = std::min(n.lo[d], a[d]);
          n.hi[d] = std::max(n.hi[d], a[d]);
        }
      }
      first = false;
    }
  }
  return n;
}

Normalizer Normalizer::identity(int act_dim) {
  Normalizer n;
  n.lo.assign(static_cast<size_t>(act_dim), -1.0);
  n.hi.assign(static_cast<size_t>(act_dim), 1.0);
  return n;
}

Tensor Normalizer::normalize_chunk(const std::vector<std::vector<double>>& chunk) const {
  Tensor out(static_cast<int>(chunk.size()), static_cast<int>(lo.size()));
  for (size_t h = 0; h < chunk.size(); ++h) {
    for (size_t d = 0; d < lo.size(); ++d) {
      const double half = 0.5 * (hi[d] - lo[d]);
      const double mid = 0.5 * (hi[d] + lo[d]);
      out.at(static_cast<int>(h), static_cast<int>(d)) =
          half < 1e-9 ? 0.0 : (chunk[h][d] - mid) / half;
    }
  }
  return out;
}

std::vector<double> Normalizer::denormalize_row(const Tensor& chunk, int row) const {
  std::vector<double> out(lo.size());
  for (size_t d = 0; d < lo.size(); ++d) {
    const double half = 0.5 * (hi[d] - lo[d]);
    const double mid = 0.5 * (hi[d] + lo[d]);
    out[d] = mid + chunk.at(row, static_cast<int>(d)) * half;
  }
  return out;
}

RawObservation split_observation(const EnvSpec& spec, const std::vector<double>& obs,
                                 int timestep) {
  detail::check_shape(static_cast<int>(obs.size()) == spec.obs_dim,
                      "split_observation: width mismatch for task " + spec.name);
  RawObservation raw;
  raw.timestep = timestep;
  raw.modalities.emplace_back(obs.begin(), obs.begin() + spec.proprio_dim);
  raw.modalities.emplace_back(obs.begin() + spec.proprio_dim, obs.end());
  return raw;
}

PolicyModel PolicyModel::init(const RunConfig& cfg, const EnvSpec& spec) {
  PolicyModel m;
  m.cfg = cfg;
  m.env_spec = spec;
  Rng rng(Rng::mix(cfg.seed, 0x1017u));
  m.encoder = FrameEncoder::init(spec.modality_dims(), cfg.embed_dim, rng);
  m.compressor = CompressorParams::init(cfg.embed_dim, cfg.memory_tokens,
                                        cfg.compressor_layers, cfg.mlp_hidden(), rng);
  m.denoiser = DenoiserParams::init(cfg.embed_dim, spec.act_dim, cfg.chunk_len,
                                    cfg.denoiser_layers, cfg.diffusion_steps,
                                    cfg.mlp_hidden(), rng);
  m.schedule = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end);
  m.normalizer = Normalizer::identity(spec.act_dim);

  ParamSet enc, comp, den;
  m.encoder.register_params(enc);
  m.compressor.register_params(comp);
  m.denoiser.register_params(den);
  m.params.merge("encoder", enc);
  m.params.merge("compressor", comp);
  m.params.merge("denoiser", den);
  return m;
}

void save_checkpoint(const std::string& path, const PolicyModel& model,
                     const std::vector<std::vector<double>>& ema_shadow) {
  const auto& entries = model.params.entries();
  detail::check_shape(ema_shadow.size() == entries.size(),
                      "save_checkpoint: EMA group count mismatch");
  json groups = json::array();
  for (size_t i = 0; i < entries.size(); ++i) {
    groups.push_back({{"name", entries[i].name},
                      {"rows", entries[i].tensor.rows()},
                      {"cols", entries[i].tensor.cols()},
                      {"values", entries[i].tensor.values()},
                      {"ema", ema_shadow[i]}});
  }
  json doc = {{"config_hash", model.cfg.config_hash()},
              {"task", model.env_spec.name},
              {"normalizer", {{"lo", model.normalizer.lo}, {"hi", model.normalizer.hi}}},
              {"groups", groups}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("edp: cannot write checkpoint: " + tmp);
    out << doc.dump(1) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("edp: cannot move checkpoint into place: " + path);
}

std::vector<std::vector<double>> load_checkpoint(const std::string& path, PolicyModel& model) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("edp: cannot open checkpoint: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw std::runtime_error("edp: checkpoint is not valid JSON: " + path);

  model.normalizer.lo = doc.at("normalizer").at("lo").get<std::vector<double>>();
  model.normalizer.hi = doc.at("normalizer").at("hi").get<std::vector<double>>();

  const auto& entries = model.params.entries();
  const json& groups = doc.at("groups");
  if (groups.size() != entries.size())
    throw std::runtime_error("edp: checkpoint has " + std::to_string(groups.size()) +
                             " groups, model expects " + std::to_string(entries.size()));
  std::vector<std::vector<double>> ema;
  ema.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    const json& g = groups[i];
    if (g.at("name").get<std::string>() != entries[i].name)
      throw std::runtime_error("edp: checkpoint group order mismatch at '" +
                               g.at("name").get<std::string>() + "'");
    if (g.at("rows").get<int>() != entries[i].tensor.rows() ||
        g.at("cols").get<int>() != entries[i].tensor.cols())
      throw std::runtime_error("edp: checkpoint shape mismatch for '" + entries[i].name + "'");
    std::vector<double> vals = g.at("values").get<std::vector<double>>();
    if (vals.size() != entries[i].tensor.values().size())
      throw std::runtime_error("edp: checkpoint value count mismatch for '" +
                               entries[i].name + "'");
    const_cast<Tensor&>(entries[i].tensor).values() = std::move(vals);
    ema.push_back(g.at("ema").get<std::vector<double>>());
    if (ema.back().size() != entries[i].tensor.values().size())
      throw std::runtime_error("edp: checkpoint EMA count mismatch for '" +
                               entries[i].name + "'");
  }
  return ema;
}

}  // namespace edp
