#include "edp/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "edp/tensor.hpp"

namespace edp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kOptionRing = 1.1;     // distance of option regions from home
constexpr double kStartJitter = 0.05;
constexpr double kLongStartX = 1.2;
constexpr double kPegY = 1.4;
constexpr double kPegX = 1.0;
constexpr double kWaypointTol = 0.15;  // corridor half-width

std::array<double, 2> ring_point(int index, int count) {
  const double angle = 0.5 * kPi + 2.0 * kPi * index / count;
  return {kOptionRing * std::cos(angle), kOptionRing * std::sin(angle)};
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

std::vector<double> clip_action(const std::vector<double>& action, double max_step) {
  detail::check_shape(action.size() == 2, "actions are 2-D displacements");
  const double norm = std::hypot(action[0], action[1]);
  if (norm <= max_step || norm == 0.0) return action;
  const double s = max_step / norm;
  return {action[0] * s, action[1] * s};
}

std::array<double, 2> option_center(const EnvSpec& spec, int index) {
  if (spec.kind == TaskKind::long_horizon)
    return {index == 0 ? -kPegX : kPegX, kPegY};
  return ring_point(index, spec.num_options);
}

EnvSpec EnvSpec::make(const std::string& task_name, int episode_len_override) {
  EnvSpec s;
  s.name = task_name;
  if (task_name == "shellgame") {
    s.kind = TaskKind::shell_game;
    s.num_options = 3;
    s.obs_dim = 2 + 2 * s.num_options;  // pose, cue one-hot, region distances
    s.tolerance = 0.35;
    s.max_step = 0.2;
  } else if (task_name == "remembercolor") {
    s.kind = TaskKind::remember_color;
    s.num_options = 3;
    s.obs_dim = 2 + s.num_options + 2 * s.num_options;  // pose, cue, color angles
    s.tolerance = 0.35;
    s.max_step = 0.2;
  } else if (task_name == "longhorizon") {
    s.kind = TaskKind::long_horizon;
    s.num_options = 2;
    s.obs_dim = 2 + 4;  // pose, both peg positions
    s.tolerance = 0.25;
    s.max_step = 0.15;
  } else if (task_name == "reach") {
    s.kind = TaskKind::reach;
    s.num_options = 2;
    s.cue_steps = 1;
    s.delay_steps = 0;
    s.obs_dim = 4;  // pose, goal
    s.tolerance = 0.25;
    s.max_step = 0.2;
  } else {
    throw std::invalid_argument("edp: unknown task: " + task_name);
  }
  if (episode_len_override > 0) s.episode_len = episode_len_override;
  s.validate();
  return s;
}

void EnvSpec::validate() const {
  detail::check_shape(num_options >= 2, "env spec: num_options must be >= 2");
  detail::check_shape(cue_steps + delay_steps < episode_len,
                      "env spec: cue_steps + delay_steps must be < episode_len");
  detail::check_shape(obs_dim > proprio_dim, "env spec: obs_dim too small");
}

ToyEnv::ToyEnv(EnvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<double> ToyEnv::reset(uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x7031u));
  const int target = rng.uniform_int(0, spec_.num_options - 1);
  // Re-derive from the same stream so reset_with_target(t, seed) matches
  // reset(seed) whenever the drawn target coincides.
  return reset_with_target(target, seed);
}

std::vector<double> ToyEnv::reset_with_target(int target, uint64_t seed) {
  detail::check_shape(target >= 0 && target < spec_.num_options,
                      "reset: target out of range");
  Rng rng(Rng::mix(seed, 0x9e51u));
  t_ = 0;
  done_ = false;
  success_ = false;
  target_ = target;
  colors_.clear();
  switch (spec_.kind) {
    case TaskKind::shell_game:
      pos_ = {rng.uniform(-kStartJitter, kStartJitter), rng.uniform(-kStartJitter, kStartJitter)};
      break;
    case TaskKind::remember_color: {
      pos_ = {rng.uniform(-kStartJitter, kStartJitter), rng.uniform(-kStartJitter, kStartJitter)};
      colors_.resize(static_cast<size_t>(spec_.num_options));
      for (int i = 0; i < spec_.num_options; ++i) colors_[static_cast<size_t>(i)] = i;
      for (int i = spec_.num_options - 1; i > 0; --i) {
        const int j = rng.uniform_int(0, i);
        std::swap(colors_[static_cast<size_t>(i)], colors_[static_cast<size_t>(j)]);
      }
      break;
    }
    case TaskKind::long_horizon: {
      // target is the goal peg; start on the opposite side
      const double side = target == 0 ? 1.0 : -1.0;
      pos_ = {side * kLongStartX + rng.uniform(-kStartJitter, kStartJitter),
              rng.uniform(-kStartJitter, kStartJitter)};
      goal_ = option_center(spec_, target);
      break;
    }
    case TaskKind::reach: {
      pos_ = {rng.uniform(-kStartJitter, kStartJitter), rng.uniform(-kStartJitter, kStartJitter)};
      const double angle = rng.uniform(0.0, 2.0 * kPi);
      const double radius = rng.uniform(0.6, 1.1);
      goal_ = {radius * std::cos(angle), radius * std::sin(angle)};
      break;
    }
  }
  return observation();
}

std::vector<double> ToyEnv::reset_from_observation(const std::vector<double>& obs0) {
  detail::check_shape(static_cast<int>(obs0.size()) == spec_.obs_dim,
                      "reset_from_observation: wrong observation width");
  t_ = 0;
  done_ = false;
  success_ = false;
  pos_ = {obs0[0], obs0[1]};
  switch (spec_.kind) {
    case TaskKind::shell_game: {
      int best = 0;
      for (int i = 1; i < spec_.num_options; ++i)
        if (obs0[static_cast<size_t>(2 + i)] > obs0[static_cast<size_t>(2 + best)]) best = i;
      target_ = best;
      break;
    }
    case TaskKind::remember_color: {
      int cue_color = 0;
      for (int i = 1; i < spec_.num_options; ++i)
        if (obs0[static_cast<size_t>(2 + i)] > obs0[static_cast<size_t>(2 + cue_color)])
          cue_color = i;
      colors_.assign(static_cast<size_t>(spec_.num_options), 0);
      target_ = 0;
      for (int i = 0; i < spec_.num_options; ++i) {
        const double cx = obs0[static_cast<size_t>(2 + spec_.num_options + 2 * i)];
        const double cy = obs0[static_cast<size_t>(2 + spec_.num_options + 2 * i + 1)];
        double angle = std::atan2(cy, cx);
        if (angle < 0) angle += 2.0 * kPi;
        const int color =
            static_cast<int>(std::lround(angle * spec_.num_options / (2.0 * kPi))) %
            spec_.num_options;
        colors_[static_cast<size_t>(i)] = color;
        if (color == cue_color) target_ = i;
      }
      break;
    }
    case TaskKind::long_horizon:
      target_ = pos_[0] > 0.0 ? 0 : 1;  // goal is the peg opposite the start side
      goal_ = option_center(spec_, target_);
      break;
    case TaskKind::reach:
      goal_ = {obs0[2], obs0[3]};
      target_ = 0;
      break;
  }
  return observation();
}

std::vector<double> ToyEnv::observation() const {
  std::vector<double> obs;
  obs.reserve(static_cast<size_t>(spec_.obs_dim));
  obs.push_back(pos_[0]);
  obs.push_back(pos_[1]);
  const bool cue_visible = t_ < spec_.cue_steps;
  switch (spec_.kind) {
    case TaskKind::shell_game: {
      for (int i = 0; i < spec_.num_options; ++i)
        obs.push_back(cue_visible && i == target_ ? 1.0 : 0.0);
      for (int i = 0; i < spec_.num_options; ++i)
        obs.push_back(dist(pos_, option_center(spec_, i)));
      break;
    }
    case TaskKind::remember_color: {
      const int cue_color = colors_[static_cast<size_t>(target_)];
      for (int i = 0; i < spec_.num_options; ++i)
        obs.push_back(cue_visible && i == cue_color ? 1.0 : 0.0);
      for (int i = 0; i < spec_.num_options; ++i) {
        const double angle = 2.0 * kPi * colors_[static_cast<size_t>(i)] / spec_.num_options;
        obs.push_back(std::cos(angle));
        obs.push_back(std::sin(angle));
      }
      break;
    }
    case TaskKind::long_horizon:
      for (int i = 0; i < 2; ++i) {
        const std::array<double, 2> peg = option_center(spec_, i);
        obs.push_back(peg[0]);
        obs.push_back(peg[1]);
      }
      break;
    case TaskKind::reach:
      obs.push_back(goal_[0]);
      obs.push_back(goal_[1]);
      break;
  }
  return obs;
}

void ToyEnv::evaluate_outcome() {
  switch (spec_.kind) {
    case TaskKind::shell_game:
    case TaskKind::remember_color: {
      if (t_ < spec_.go_time()) break;
      for (int i = 0; i < spec_.num_options; ++i) {
        if (dist(pos_, option_center(spec_, i)) <= spec_.tolerance) {
          done_ = true;
          success_ = i == target_;
          return;
        }
      }
      break;
    }
    case TaskKind::long_horizon:
      break;  // judged at timeout only
    case TaskKind::reach:
      if (dist(pos_, goal_) <= spec_.tolerance) {
        done_ = true;
        success_ = true;
        return;
      }
      break;
  }
  if (t_ >= spec_.episode_len) {
    done_ = true;
    if (spec_.kind == TaskKind::long_horizon)
      success_ = dist(pos_, goal_) <= spec_.tolerance;
  }
}

ToyEnv::StepResult ToyEnv::step(const std::vector<double>& action) {
  detail::check_contract(!done_, "step() on a finished episode");
  detail::check_shape(static_cast<int>(action.size()) == spec_.act_dim,
                      "step: action width mismatch");
  const std::vector<double> a = clip_action(action, spec_.max_step);
  pos_[0] += a[0];
  pos_[1] += a[1];
  ++t_;
  evaluate_outcome();
  return StepResult{observation(), done_, success_};
}

std::array<double, 2> ToyEnv::target_point() const {
  switch (spec_.kind) {
    case TaskKind::shell_game:
    case TaskKind::remember_color:
      if (t_ < spec_.go_time()) return {0.0, 0.0};  // hold near home until go
      return option_center(spec_, target_);
    case TaskKind::long_horizon: {
      // Shared corridor along x = 0: first move onto it, then climb, then
      // branch. Off-corridor drift is corrected horizontally so the expert
      // never backtracks.
      const double branch_y = kPegY - 0.15;
      if (pos_[1] >= branch_y) return goal_;
      if (std::fabs(pos_[0]) > kWaypointTol) return {0.0, std::max(0.0, pos_[1])};
      return {0.0, kPegY};
    }
    case TaskKind::reach:
      return goal_;
  }
  return {0.0, 0.0};
}

std::vector<double> ToyEnv::expert_action(Rng& rng, double noise_level) const {
  const std::array<double, 2> tgt = target_point();
  std::vector<double> desired = {tgt[0] - pos_[0], tgt[1] - pos_[1]};
  std::vector<double> a = clip_action(desired, spec_.max_step);
  if (noise_level > 0.0) {
    a[0] += noise_level * rng.normal();
    a[1] += noise_level * rng.normal();
  }
  return a;
}

}  // namespace edp
