#include "edp/gradcheck.hpp"

#include <chrono>
#include <cmath>

#include "edp/model.hpp"
#include "edp/ops.hpp"
#include "edp/trainer.hpp"

namespace edp {

namespace {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

RunConfig tiny_config(uint64_t seed) {
  RunConfig cfg;
  cfg.task = "shellgame";
  cfg.seed = seed;
  cfg.embed_dim = 16;
  cfg.window_len = 2;
  cfg.memory_tokens = 2;
  cfg.compressor_layers = 2;
  cfg.cache_size = 4;
  cfg.chunk_len = 4;
  cfg.denoiser_layers = 2;
  cfg.mlp_ratio = 2;
  cfg.diffusion_steps = 8;
  cfg.dropout = 0.0;
  cfg.validate();
  return cfg;
}

// A short synthetic trajectory with enough steps that the deterministic
// subsample rule selects multiple out-of-window frames.
Trajectory synthetic_trajectory(const EnvSpec& spec, int length, Rng& rng) {
  Trajectory traj;
  for (int t = 0; t < length; ++t) {
    std::vector<double> obs(static_cast<size_t>(spec.obs_dim));
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
    traj.observations.push_back(std::move(obs));
    traj.actions.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  }
  traj.success = true;
  return traj;
}

}  // namespace

GradCheckReport run_gradcheck(uint64_t seed, bool corrupt) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig cfg = tiny_config(seed);
  const EnvSpec spec = EnvSpec::make(cfg.task);
  PolicyModel model = PolicyModel::init(cfg, spec);

  Rng data_rng(Rng::mix(seed, 0xDA7A));
  const int decision_t = 13;  // out-of-window range [0, 11] selects taus 4 and 9
  const Trajectory traj = synthetic_trajectory(spec, decision_t + 1, data_rng);

  const int k = cfg.diffusion_steps / 2;
  Tensor eps(cfg.chunk_len, spec.act_dim);
  for (double& v : eps.values()) v = data_rng.normal();
  const Tensor a0 = model.normalizer.normalize_chunk(chunk_at(traj, decision_t, cfg.chunk_len));

  // Reference forward with tape; keep the post-insertion memory state so
  // finite differences can replay against pinned caches.
  MemoryState final_state;
  model.params.zero_grads();
  {
    Tape tape;
    Tensor window = window_for_sample(model, traj, decision_t);
    Tensor episodic = episodic_for_sample(model, traj, decision_t, SubsampleMode::infer,
                                          nullptr, Rng::mix(seed, 1), &final_state);
    Tensor loss =
        training_loss_at(window, episodic, a0, k, eps, model.schedule, model.denoiser);
    tape.backward(loss);
  }

  if (corrupt) {
    // Simulates a broken backward rule in the denoiser.
    const Tensor* t = model.params.find("denoiser.block0.sq");
    t->grad()[0] += 0.25;
  }

  NoTapeGuard guard;
  auto forward = [&] {
    Tensor window = window_for_sample(model, traj, decision_t);
    Tensor episodic = compress_replay(final_state, model.compressor);
    return training_loss_at(window, episodic, a0, k, eps, model.schedule, model.denoiser)
        .item();
  };

  GradCheckReport report;
  const char* prefixes[] = {"encoder.", "compressor.", "denoiser."};
  for (const char* prefix : prefixes) {
    GradCheckGroup group;
    group.name = std::string(prefix).substr(0, std::string(prefix).size() - 1);
    for (const ParamSet::Entry& entry : model.params.entries()) {
      if (entry.name.rfind(prefix, 0) != 0) continue;
      std::vector<double>& vals = const_cast<Tensor&>(entry.tensor).values();
      const std::vector<double>& grads = entry.tensor.grad();
      group.scalars += vals.size();
      for (size_t i = 0; i < vals.size(); ++i) {
        const double saved = vals[i];
        const double h = 1e-5;
        vals[i] = saved + h;
        const double fp = forward();
        vals[i] = saved - h;
        const double fm = forward();
        vals[i] = saved;
        group.max_rel_err =
            std::max(group.max_rel_err, relative_error(grads[i], (fp - fm) / (2 * h)));
      }
    }
    report.worst = std::max(report.worst, group.max_rel_err);
    report.groups.push_back(group);
  }

  // Loss reduction itself: analytic gradient of mse against its closed form.
  {
    GradCheckGroup group;
    group.name = "loss";
    Tensor pred(cfg.chunk_len, spec.act_dim, true);
    for (double& v : pred.values()) v = data_rng.uniform(-1.0, 1.0);
    {
      Tape tape;
      tape.backward(mse_loss(pred, eps));
    }
    group.scalars = pred.values().size();
    const double n = static_cast<double>(pred.values().size());
    for (size_t i = 0; i < pred.values().size(); ++i) {
      const double closed = 2.0 * (pred.values()[i] - eps.values()[i]) / n;
      group.max_rel_err = std::max(group.max_rel_err, relative_error(pred.grad()[i], closed));
    }
    report.worst = std::max(report.worst, group.max_rel_err);
    report.groups.push_back(group);
  }

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace edp
