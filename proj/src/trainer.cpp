#include "edp/trainer.hpp"

#include <cmath>

#include "edp/ops.hpp"

namespace edp {

Tensor window_for_sample(const PolicyModel& model, const Trajectory& traj, int t) {
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(model.cfg.window_len));
  for (int i = t - model.cfg.window_len + 1; i <= t; ++i) {
    const int idx = std::max(0, i);
    const RawObservation raw =
        split_observation(model.env_spec, traj.observations[static_cast<size_t>(idx)], idx);
    rows.push_back(model.encoder.encode(raw).values);
  }
  return concat_rows(rows);
}

Tensor episodic_for_sample(const PolicyModel& model, const Trajectory& traj, int t,
                           SubsampleMode mode, Rng* subsample_rng, uint64_t memstate_seed,
                           MemoryState* final_state) {
  const RunConfig& cfg = model.cfg;
  const int len = out_of_window_len(t, cfg.window_len);
  const std::vector<int> selected =
      subsample_history(len, cfg.subsample_ratio, mode, subsample_rng);
  MemoryState st = MemoryState::make(
      static_cast<size_t>(cfg.window_len), static_cast<size_t>(cfg.cache_size),
      cfg.embed_dim, cfg.memory_tokens, cfg.compressor_layers,
      cache_policy_from_string(cfg.policy), memstate_seed);
  Tensor episodic;
  if (selected.empty()) {
    episodic = null_memory(cfg.memory_tokens, cfg.embed_dim);
  } else {
    std::vector<HistoryFrame> frames;
    frames.reserve(selected.size());
    {
      // Out-of-window frames reach the loss only through detached cache
      // entries, so their encoding never needs the tape.
      NoTapeGuard guard;
      for (int tau : selected) {
        const RawObservation raw =
            split_observation(model.env_spec, traj.observations[static_cast<size_t>(tau)], tau);
        const ObservationToken token = model.encoder.encode(raw);
        frames.push_back(HistoryFrame{stamp_out_of_window(token), tau});
      }
    }
    episodic = run_history(frames, model.compressor, st, /*record_final_only=*/true);
  }
  if (final_state != nullptr) *final_state = st;
  return episodic;
}

TrainResult train_run(const RunConfig& cfg, const DemoDataset& dataset, PolicyModel& model,
                      const std::string& checkpoint_path) {
  TrainResult result;
  detail::check_shape(!dataset.trajectories.empty(), "train_run: dataset is empty");
  detail::check_shape(cfg.effective_replan() <= cfg.chunk_len,
                      "train_run: replan_interval must not exceed chunk_len");

  model.normalizer = Normalizer::fit(dataset);

  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.learning_rate;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW optimizer(model.params.tensors(), opt_cfg);
  Ema ema(model.params.tensors(), cfg.ema_rate);
  result.ema_shadow = ema.shadow();

  std::vector<TrainingBatch> batches;
  size_t batch_cursor = 0;
  int epoch = 0;

  auto write_checkpoint = [&] {
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, model, ema.shadow());
  };

  for (int step = 1; step <= cfg.gradient_steps; ++step) {
    if (batch_cursor >= batches.size()) {
      Rng epoch_rng(Rng::mix(cfg.seed, 0xE000000ULL + static_cast<uint64_t>(epoch)));
      batches = make_batches(dataset, cfg.batch_size, cfg.subsample_ratio, cfg.window_len,
                             epoch_rng);
      batch_cursor = 0;
      ++epoch;
    }
    const TrainingBatch& batch = batches[batch_cursor++];

    Tape tape;
    std::vector<Tensor> losses;
    losses.reserve(batch.items.size());
    for (size_t i = 0; i < batch.items.size(); ++i) {
      const SampleRef ref = batch.items[i];
      const Trajectory& traj = dataset.trajectories[static_cast<size_t>(ref.trajectory)];
      const uint64_t salt =
          static_cast<uint64_t>(step) * 8192 + static_cast<uint64_t>(i);
      Rng sample_rng(Rng::mix(cfg.seed, 0x5A000000ULL + salt));

      Tensor window = window_for_sample(model, traj, ref.t);
      Tensor episodic;
      if (cfg.window_only) {
        episodic = Tensor();  // condition block carries no episodic rows
      } else if (cfg.zero_episodic) {
        episodic = null_memory(cfg.memory_tokens, cfg.embed_dim);
      } else {
        episodic = episodic_for_sample(model, traj, ref.t, SubsampleMode::train, &sample_rng,
                                       Rng::mix(cfg.seed, 0xCACE000ULL + salt));
        episodic = episodic_dropout(episodic, cfg.dropout, /*train_mode=*/true, sample_rng);
      }
      Tensor a0 = model.normalizer.normalize_chunk(chunk_at(traj, ref.t, cfg.chunk_len));
      losses.push_back(training_loss(window, episodic, a0, model.schedule, model.denoiser,
                                     sample_rng));
    }
    Tensor total = mean_scalars(losses);
    const double loss_value = total.item();
    if (!std::isfinite(loss_value)) {
      result.ok = false;
      result.error = "non-finite loss at step " + std::to_string(step) +
                     "; last checkpoint retained";
      result.ema_shadow = ema.shadow();
      return result;
    }
    tape.backward(total);
    const double grad_norm = model.params.grad_norm();
    optimizer.step();
    ema.update();
    optimizer.zero_grads();
    result.rows.push_back(TrainMetricsRow{step, loss_value, grad_norm});

    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) write_checkpoint();
  }
  result.ema_shadow = ema.shadow();
  write_checkpoint();
  return result;
}

}  // namespace edp
