#pragma once

#include "ttvr/probmap/probmap.hpp"
#include "ttvr/rl/rollout.hpp"

#include <bitset>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>

namespace ttvr::copilot {

using kinematics::Dof;
using kinematics::JointState;

enum class Phase { initialization, localization, releasing, anchoring, retraction };
std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view name);

using DofSet = std::bitset<kinematics::kDofCount>;
DofSet allowed_dofs(Phase p);
/// Successor in the fixed order, or retraction from any phase.
bool transition_allowed(Phase from, Phase to);

enum class ControlMode { master_slave, copilot };
std::string_view to_string(ControlMode m);
std::optional<ControlMode> parse_mode(std::string_view name);

struct OperatorCommand {
  Dof dof = Dof::translation;
  double velocity_fraction = 0.0;  // of the DOF's max velocity, in [-1, 1]
  double timestamp = 0.0;
  /// Sheath and core move together (releasing phase only).
  bool coupled = false;
  /// Client sequence number, echoed in state acknowledgements; -1 when absent.
  std::int64_t seq = -1;
};

struct SessionEvent {
  double t = 0.0;
  std::string kind;
  nlohmann::json payload;
};

struct SessionConfig {
  double tick_rate = 50.0;     // Hz
  double idle_replan = 0.5;    // s without commands that ends an intervention
  probmap::GovernorConfig governor;
};

/// Immutable snapshot published to observers.
struct SessionState {
  double t = 0.0;
  JointState joints;
  TipPose tip;
  Phase phase = Phase::initialization;
  ControlMode mode = ControlMode::master_slave;
  std::array<double, kinematics::kDofCount> scales{1, 1, 1, 1, 1, 1};
  bool collision = false;
  bool success = false;
  bool intervening = false;
  bool manual_only = false;
  bool blocked = false;  // the next autonomous step would collide
  double total_time = 0.0;
  double intervention_time = 0.0;
  std::size_t plan_index = 0;
  std::size_t plan_size = 0;
  std::string terminal() const { return collision ? "collision" : (success ? "success" : "running"); }
};

/// One co-piloted (or master-slave) control loop. Single owner.
class Session {
 public:
  /// In copilot mode the nominal plan is a deterministic policy rollout from
  /// the ideal initial state (the env's nominal init), tracked relative to the
  /// actual initial state. Throws Error when that rollout does not succeed.
  Session(ControlMode mode, rl::LocalizationEnv env, std::shared_ptr<const rl::Policy> policy,
          std::shared_ptr<const probmap::ProbabilityMap> maps, const JointState& initial,
          SessionConfig cfg = {}, Phase phase = Phase::initialization);

  /// Advances time by dt. A command on a DOF outside the phase, or with
  /// |velocity_fraction| > 1, is rejected and logged and nothing moves.
  const SessionState& tick(double dt, const std::optional<OperatorCommand>& cmd = std::nullopt);
  /// Recomputes the plan from the current state; ends any intervention.
  void end_intervention_replan();
  /// Throws Error on an illegal transition (logged).
  void set_phase(Phase next);
  /// Switching to copilot replans from the current state.
  void set_mode(ControlMode mode);

  const SessionState& state() const { return state_; }
  const std::vector<SessionEvent>& events() const { return events_; }
  const std::vector<JointState>& plan() const { return plan_; }
  /// Planning-DOF offset added to plan waypoints while tracking.
  const JointState& plan_offset() const { return offset_; }
  const rl::LocalizationEnv& env() const { return env_; }
  const SessionConfig& config() const { return cfg_; }
  const probmap::ProbabilityMap* maps() const { return maps_.get(); }
  /// Final plan waypoint with the tracking offset applied.
  std::optional<JointState> predicted_plan_end() const;

  void write_event_log(std::ostream& os) const;

 private:
  void log(std::string kind, nlohmann::json payload = nlohmann::json::object());
  void replan(const char* reason);
  JointState tracked_waypoint(std::size_t i) const;
  void refresh_outputs(const std::optional<OperatorCommand>& cmd, double applied_scale);

  rl::LocalizationEnv env_;
  std::shared_ptr<const rl::Policy> policy_;
  std::shared_ptr<const probmap::ProbabilityMap> maps_;
  SessionConfig cfg_;
  SessionState state_;
  std::vector<JointState> plan_;
  JointState offset_{0, 0, 0, 0, 0, 0};
  double last_command_t_ = 0.0;
  std::vector<SessionEvent> events_;
};

Session init_session(std::shared_ptr<const rl::Policy> policy, std::shared_ptr<const probmap::ProbabilityMap> maps,
                     const rl::LocalizationEnv& env, ControlMode mode, const JointState& initial,
                     SessionConfig cfg = {}, Phase phase = Phase::initialization);

/// Multi-producer command mailbox drained by the control loop: the latest
/// command wins and older pending ones are counted as dropped.
class CommandQueue {
 public:
  void push(const OperatorCommand& cmd);
  struct Drained {
    std::optional<OperatorCommand> command;
    std::size_t dropped = 0;
  };
  Drained take_latest();

 private:
  std::mutex mu_;
  std::optional<OperatorCommand> pending_;
  std::size_t dropped_ = 0;
};

nlohmann::json to_json(const SessionEvent& e);

}  // namespace ttvr::copilot
