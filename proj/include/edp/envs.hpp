#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edp/rng.hpp"

namespace edp {

// Point-control tasks on the plane. Three are memory tasks -- the
// information needed at decision time is absent from recent observations --
// and one is a plain reaching task used as the Markovian control.
//
//   shellgame      a cue shown only during the first cue_steps frames marks
//                  one of num_options regions; after a delay the agent must
//                  enter that region. Entering a wrong region fails.
//   remembercolor  like shellgame, but the cue names a color and the
//                  region-to-color assignment is shuffled per episode, so
//                  the cue must be bound to the currently visible layout.
//   longhorizon    the start side (left/right) determines the far peg to
//                  finish on; both routes share a midline corridor, so
//                  mid-episode poses do not reveal the goal.
//   reach          goal position is always observable.
enum class TaskKind { shell_game, remember_color, long_horizon, reach };

struct EnvSpec {
  TaskKind kind = TaskKind::reach;
  std::string name;
  int obs_dim = 0;
  int act_dim = 2;
  int episode_len = 40;
  int cue_steps = 5;    // frames that carry the cue
  int delay_steps = 20; // frames between cue end and go time
  int num_options = 3;
  int proprio_dim = 2;  // leading pose entries; the rest are task features
  double max_step = 0.2;
  double tolerance = 0.35;  // success region radius

  static EnvSpec make(const std::string& task_name, int episode_len_override = 0);
  std::vector<int> modality_dims() const { return {proprio_dim, obs_dim - proprio_dim}; }
  int go_time() const { return cue_steps + delay_steps; }
  void validate() const;
};

class ToyEnv {
 public:
  explicit ToyEnv(EnvSpec spec);

  std::vector<double> reset(uint64_t seed);
  // Deterministic-target variant for constructing colliding episode pairs.
  std::vector<double> reset_with_target(int target, uint64_t seed);
  // Rebuilds the hidden episode state from a recorded first observation
  // (the cue is visible at t = 0 by construction), for open-loop replay.
  std::vector<double> reset_from_observation(const std::vector<double>& obs0);

  struct StepResult {
    std::vector<double> obs;
    bool done = false;
    bool success = false;
  };
  StepResult step(const std::vector<double>& action);

  int timestep() const { return t_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  int hidden_target() const { return target_; }
  std::array<double, 2> position() const { return pos_; }
  const EnvSpec& spec() const { return spec_; }

  // Proportional controller with hidden-state access plus zero-mean noise.
  std::vector<double> expert_action(Rng& rng, double noise_level) const;

 private:
  std::vector<double> observation() const;
  std::array<double, 2> target_point() const;  // where the expert is headed
  void evaluate_outcome();

  EnvSpec spec_;
  std::array<double, 2> pos_ = {0.0, 0.0};
  std::array<double, 2> goal_ = {0.0, 0.0};  // reach / longhorizon goal point
  int target_ = 0;                           // hidden option index
  std::vector<int> colors_;                  // remembercolor: region -> color
  int t_ = 0;
  bool done_ = false;
  bool success_ = false;
};

// Clips to the task's maximum per-step displacement (radial).
std::vector<double> clip_action(const std::vector<double>& action, double max_step);

// Region center for option `index` of a spec (memory tasks).
std::array<double, 2> option_center(const EnvSpec& spec, int index);

}  // namespace edp
