#pragma once

#include "ttvr/anatomy/heart_model.hpp"
#include "ttvr/kinematics/catheter.hpp"
#include "ttvr/kinematics/joints.hpp"

#include <array>
#include <random>
#include <string_view>

namespace ttvr::rl {

using kinematics::Dof;
using kinematics::JointLimits;
using kinematics::JointState;

inline constexpr int kObservationSize = 9;
inline constexpr int kActionSize = 3;

using Observation = std::array<double, kObservationSize>;
using Action = std::array<double, kActionSize>;

struct EnvConfig {
  int max_steps = 200;
  /// Largest per-step change of translation (mm), rotation (deg), bending (deg).
  Action action_scale{20.0, 15.0, 15.0};
  double success_pos_tol = 5.0;   // mm
  double success_ang_tol = 10.0;  // deg
  double wall_margin = 1.0;       // mm
  double r_step = -50.0;
  double r_obstacle = -300.0;
  double r_target = 300.0;
  double error_weight = 1.0;  // per mm

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Uniform offsets around the nominal state for each planning DOF.
struct InitDistribution {
  JointState nominal{20.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  kinematics::Interval translation{-15.0, 15.0};
  kinematics::Interval rotation{-30.0, 30.0};
  kinematics::Interval bending{0.0, 10.0};

  static InitDistribution fixed(const JointState& nominal);
};

enum class Terminal { running, collision, timeout, max_bend, success };
std::string_view to_string(Terminal t);

struct RewardBreakdown {
  double step = 0.0;
  double obstacle = 0.0;
  double error = 0.0;
  double target = 0.0;
  double total() const { return step + obstacle + error + target; }
};

/// r_error = -w * sum over p1, p2 of the distance to the tip axis line.
double error_term(const TipPose& tip, const anatomy::ValveTarget& target, const EnvConfig& cfg);

/// Piecewise reward: collision -> obstacle + step; timeout or max bend ->
/// error + step; success -> target + error + step; running -> step.
RewardBreakdown reward(const TipPose& tip, const anatomy::ValveTarget& target, Terminal terminal,
                       const EnvConfig& cfg);

struct StepOutcome {
  Observation observation{};
  RewardBreakdown reward;
  Terminal terminal = Terminal::running;
  JointState joints;
};

/// Localization task: steer translation, rotation and bending until the tip
/// crosses the annulus on its centerline. Single owner; seeded.
class LocalizationEnv {
 public:
  LocalizationEnv(anatomy::HeartModel model, anatomy::ValveTarget target, JointLimits limits, EnvConfig cfg,
                  InitDistribution init, kinematics::RigGeometry rig, std::uint64_t seed);

  /// Draws an initial state; redraws up to 100 times while it collides.
  Observation reset();
  /// Starts an episode from an explicit state (clamped to the limits).
  Observation reset_to(const JointState& joints);
  /// Components of `action` are clipped to [-1, 1] before scaling.
  StepOutcome step(const Action& action);

  Observation observe() const;
  bool is_success(const TipPose& tip) const;
  bool collides(const JointState& joints) const;
  /// Progress potential for learner-side shaping: minus the tip distance to p2
  /// minus 50 mm per radian of tip misalignment.
  double potential(const JointState& joints) const;

  const JointState& joints() const { return joints_; }
  int steps() const { return steps_; }
  Terminal terminal() const { return terminal_; }
  const anatomy::HeartModel& model() const { return model_; }
  const anatomy::ValveTarget& target() const { return target_; }
  const JointLimits& limits() const { return limits_; }
  const EnvConfig& config() const { return cfg_; }
  const InitDistribution& init_distribution() const { return init_; }
  const kinematics::RigGeometry& rig() const { return rig_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  anatomy::HeartModel model_;
  anatomy::ValveTarget target_;
  JointLimits limits_;
  EnvConfig cfg_;
  InitDistribution init_;
  kinematics::RigGeometry rig_;
  std::mt19937_64 rng_;
  JointState joints_;
  int steps_ = 0;
  Terminal terminal_ = Terminal::running;
};

/// Validates inputs; the rig's port is taken from the model.
LocalizationEnv make_env(const anatomy::HeartModel& model, const anatomy::ValveTarget& target,
                         const JointLimits& limits, const EnvConfig& cfg, const InitDistribution& init,
                         kinematics::RigGeometry rig = {}, std::uint64_t seed = 0);

/// Observation of `joints`: normalized planning DOFs, then p1 and p2 in the tip frame (mm).
Observation observe(const JointState& joints, const JointLimits& limits, const kinematics::RigGeometry& rig,
                    const anatomy::ValveTarget& target);

}  // namespace ttvr::rl
