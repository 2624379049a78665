#pragma once

#include "ttvr/rl/sac.hpp"

namespace ttvr::rl {

struct Trajectory {
  JointState initial;
  std::vector<Action> actions;
  std::vector<StepOutcome> steps;

  double total_reward() const;
  Terminal terminal() const { return steps.empty() ? Terminal::running : steps.back().terminal; }
  /// Initial state followed by the state after every step.
  std::vector<JointState> joint_path() const;
};

using Controller = std::function<Action(const Observation&, const LocalizationEnv&)>;

/// Steps an already reset env until it terminates.
Trajectory rollout(const Controller& controller, LocalizationEnv& env);
Trajectory rollout(const Policy& policy, LocalizationEnv& env, bool deterministic, std::mt19937_64* rng = nullptr);

struct RolloutRecord {
  Terminal terminal = Terminal::running;
  int length = 0;
  double total_reward = 0.0;
  double position_error = 0.0;     // mm, lateral distance of the final tip from the centerline
  double orientation_error = 0.0;  // deg, final tip axis vs valve axis
  JointState initial, final_state;
};

RolloutRecord summarize(const Trajectory& t, const LocalizationEnv& env);

struct LocalizationStats {
  double position_mean = 0.0, position_std = 0.0, position_max = 0.0;
  double orientation_mean = 0.0, orientation_std = 0.0, orientation_max = 0.0;
  double success_rate = 0.0;
  std::vector<RolloutRecord> records;
};

/// Sample standard deviation (0 for a single record).
LocalizationStats aggregate(std::vector<RolloutRecord> records);

/// n rollouts from inits drawn with `seed`; deterministic policy actions.
LocalizationStats evaluate(const Controller& controller, LocalizationEnv& env, int n, std::uint64_t seed);
LocalizationStats evaluate(const Policy& policy, LocalizationEnv& env, int n, std::uint64_t seed);

}  // namespace ttvr::rl
