#include "edp/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "edp/tensor.hpp"

namespace edp {

using nlohmann::json;

DemoDataset generate_dataset(const EnvSpec& spec, int count, uint64_t seed,
                             double noise_level) {
  detail::check_shape(count >= 1, "generate_dataset: count must be >= 1");
  DemoDataset ds;
  ds.task = spec.name;
  ds.obs_dim = spec.obs_dim;
  ds.act_dim = spec.act_dim;
  ds.seed = seed;
  ds.noise_level = noise_level;

  ToyEnv env(spec);
  int attempts = 0;
  while (static_cast<int>(ds.trajectories.size()) < count) {
    if (attempts >= 4 * count &&
        static_cast<int>(ds.trajectories.size()) * 2 < attempts) {
      throw std::runtime_error(
          "edp: expert success rate below 50% while generating '" + spec.name +
          "' (" + std::to_string(ds.trajectories.size()) + "/" +
          std::to_string(attempts) + " attempts); spec is misconfigured");
    }
    const uint64_t episode_seed = Rng::mix(seed, static_cast<uint64_t>(attempts));
    Rng noise_rng(Rng::mix(episode_seed, 0xA5A5u));
    Trajectory traj;
    std::vector<double> obs = env.reset(episode_seed);
    while (!env.done()) {
      traj.observations.push_back(obs);
      std::vector<double> action = env.expert_action(noise_rng, noise_level);
      traj.actions.push_back(action);
      obs = env.step(action).obs;
    }
    traj.success = env.success();
    ++attempts;
    if (traj.success) ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

void save_dataset(const DemoDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("edp: cannot open for writing: " + path);
  json header = {{"format_version", 1},
                 {"task", dataset.task},
                 {"obs_dim", dataset.obs_dim},
                 {"act_dim", dataset.act_dim},
                 {"num_trajectories", dataset.trajectories.size()},
                 {"seed", dataset.seed},
                 {"noise_level", dataset.noise_level}};
  out << header.dump() << "\n";
  for (const Trajectory& traj : dataset.trajectories) {
    json line = {{"success", traj.success},
                 {"observations", traj.observations},
                 {"actions", traj.actions}};
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("edp: write failed: " + path);
}

namespace {

json parse_line(const std::string& text, int line_no) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded())
    throw std::runtime_error("edp: dataset parse error at line " + std::to_string(line_no));
  return parsed;
}

}  // namespace

DemoDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("edp: cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("edp: dataset is empty: " + path);
  json header = parse_line(line, 1);
  DemoDataset ds;
  try {
    ds.task = header.at("task").get<std::string>();
    ds.obs_dim = header.at("obs_dim").get<int>();
    ds.act_dim = header.at("act_dim").get<int>();
    ds.seed = header.at("seed").get<uint64_t>();
    ds.noise_level = header.at("noise_level").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("edp: dataset header at line 1: ") + e.what());
  }
  const size_t expected = header.at("num_trajectories").get<size_t>();

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj = parse_line(line, line_no);
    Trajectory traj;
    try {
      traj.success = obj.at("success").get<bool>();
      traj.observations = obj.at("observations").get<std::vector<std::vector<double>>>();
      traj.actions = obj.at("actions").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw std::runtime_error("edp: dataset trajectory at line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    if (traj.observations.size() != traj.actions.size())
      throw std::runtime_error("edp: dataset line " + std::to_string(line_no) +
                               ": observation/action count mismatch");
    for (const std::vector<double>& o : traj.observations)
      if (static_cast<int>(o.size()) != ds.obs_dim)
        throw std::runtime_error("edp: dataset line " + std::to_string(line_no) +
                                 ": observation width != header obs_dim");
    for (const std::vector<double>& a : traj.actions)
      if (static_cast<int>(a.size()) != ds.act_dim)
        throw std::runtime_error("edp: dataset line " + std::to_string(line_no) +
                                 ": action width != header act_dim");
    ds.trajectories.push_back(std::move(traj));
  }
  if (ds.trajectories.size() != expected)
    throw std::runtime_error("edp: dataset header claims " + std::to_string(expected) +
                             " trajectories but file holds " +
                             std::to_string(ds.trajectories.size()));
  return ds;
}

std::vector<int> subsample_history(int len, int ratio, SubsampleMode mode, Rng* rng) {
  detail::check_shape(ratio >= 1, "subsample ratio must be >= 1");
  std::vector<int> out;
  if (len <= 0) return out;
  if (mode == SubsampleMode::infer) {
    for (int tau = ratio - 1; tau < len; tau += ratio) out.push_back(tau);
    return out;
  }
  detail::check_shape(rng != nullptr, "train-mode subsampling needs an rng");
  for (int start = 0; start < len; start += ratio) {
    const int end = std::min(start + ratio, len);  // exclusive
    out.push_back(rng->uniform_int(start, end - 1));
  }
  return out;
}

int out_of_window_len(int t, int window_len) {
  return std::max(0, t - window_len + 1);
}

std::vector<TrainingBatch> make_batches(const DemoDataset& dataset, int batch_size,
                                        int ratio, int window_len, Rng& rng) {
  detail::check_shape(batch_size >= 1, "batch_size must be >= 1");
  std::map<int, std::vector<SampleRef>> buckets;
  for (size_t ti = 0; ti < dataset.trajectories.size(); ++ti) {
    const int len = dataset.trajectories[ti].length();
    for (int t = 0; t < len; ++t) {
      const int hist = out_of_window_len(t, window_len);
      const int segments = (hist + ratio - 1) / ratio;
      buckets[segments].push_back(SampleRef{static_cast<int>(ti), t});
    }
  }
  std::vector<TrainingBatch> batches;
  for (auto& [segments, refs] : buckets) {
    // in-bucket shuffle
    for (size_t i = refs.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(refs[i - 1], refs[j]);
    }
    for (size_t start = 0; start < refs.size(); start += static_cast<size_t>(batch_size)) {
      TrainingBatch batch;
      batch.history_segments = segments;
      const size_t end = std::min(refs.size(), start + static_cast<size_t>(batch_size));
      for (size_t i = start; i < end; ++i) {
        batch.items.push_back(refs[i]);
        batch.max_history_len =
            std::max(batch.max_history_len, out_of_window_len(refs[i].t, window_len));
      }
      batches.push_back(std::move(batch));
    }
  }
  // bucket/batch order shuffle
  for (size_t i = batches.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(batches[i - 1], batches[j]);
  }
  return batches;
}

const std::vector<double>& padded_frame(const Trajectory& traj, int pad, int index) {
  detail::check_shape(index >= 0, "padded_frame: negative index");
  const int real = index - pad;
  return traj.observations[static_cast<size_t>(std::max(0, real))];
}

std::vector<std::vector<double>> chunk_at(const Trajectory& traj, int t, int horizon) {
  detail::check_shape(t >= 0 && t < traj.length(), "chunk_at: t out of range");
  std::vector<std::vector<double>> chunk;
  chunk.reserve(static_cast<size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    const int idx = std::min(t + h, traj.length() - 1);
    chunk.push_back(traj.actions[static_cast<size_t>(idx)]);
  }
  return chunk;
}

}  // namespace edp
