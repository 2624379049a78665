#include "ttvr/copilot/session.hpp"

#include <ostream>

namespace ttvr::copilot {

namespace {

constexpr std::array<Phase, 5> kPhaseOrder = {Phase::initialization, Phase::localization, Phase::releasing,
                                              Phase::anchoring, Phase::retraction};

DofSet dofs(std::initializer_list<Dof> list) {
  DofSet s;
  for (Dof d : list) s.set(static_cast<std::size_t>(d));
  return s;
}

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::initialization: return "initialization";
    case Phase::localization: return "localization";
    case Phase::releasing: return "releasing";
    case Phase::anchoring: return "anchoring";
    case Phase::retraction: return "retraction";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (Phase p : kPhaseOrder)
    if (to_string(p) == name) return p;
  return std::nullopt;
}

DofSet allowed_dofs(Phase p) {
  switch (p) {
    case Phase::initialization: return dofs({Dof::translation, Dof::rotation});
    case Phase::localization: return dofs({Dof::translation, Dof::rotation, Dof::bending});
    case Phase::releasing: return dofs({Dof::sheath, Dof::core});
    case Phase::anchoring: return {};
    case Phase::retraction: return dofs({Dof::translation, Dof::sheath, Dof::core});
  }
  return {};
}

bool transition_allowed(Phase from, Phase to) {
  if (to == Phase::retraction) return from != Phase::retraction;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

std::string_view to_string(ControlMode m) { return m == ControlMode::copilot ? "copilot" : "master_slave"; }

std::optional<ControlMode> parse_mode(std::string_view name) {
  if (name == "copilot") return ControlMode::copilot;
  if (name == "master_slave") return ControlMode::master_slave;
  return std::nullopt;
}

Session::Session(ControlMode mode, rl::LocalizationEnv env, std::shared_ptr<const rl::Policy> policy,
                 std::shared_ptr<const probmap::ProbabilityMap> maps, const JointState& initial, SessionConfig cfg,
                 Phase phase)
    : env_(std::move(env)), policy_(std::move(policy)), maps_(std::move(maps)), cfg_(cfg) {
  if (!(cfg_.tick_rate > 0.0)) throw ConfigError("copilot.tick_rate", "must be > 0");
  if (!(cfg_.idle_replan > 0.0)) throw ConfigError("copilot.idle_replan", "must be > 0");
  state_.mode = mode;
  state_.phase = phase;
  state_.joints = kinematics::clamp_joints(initial, env_.limits());
  log("session_start", {{"mode", to_string(mode)}, {"phase", to_string(phase)}});
  if (mode == ControlMode::copilot) {
    if (!policy_ || !maps_) throw Error("copilot mode needs a policy and probability maps");
    const JointState ideal = env_.init_distribution().nominal;
    env_.reset_to(ideal);
    const rl::Trajectory t = rl::rollout(*policy_, env_, true);
    if (t.terminal() != rl::Terminal::success)
      throw Error(std::string("nominal rollout from the ideal initial state ended in ") +
                  std::string(rl::to_string(t.terminal())));
    plan_ = t.joint_path();
    for (Dof d : kinematics::kPlanningDofs) offset_[d] = state_.joints[d] - plan_.front()[d];
    state_.plan_index = 1;
    log("plan", {{"reason", "ideal_init"}, {"waypoints", plan_.size()}});
  }
  refresh_outputs(std::nullopt, 1.0);
}

Session init_session(std::shared_ptr<const rl::Policy> policy, std::shared_ptr<const probmap::ProbabilityMap> maps,
                     const rl::LocalizationEnv& env, ControlMode mode, const JointState& initial, SessionConfig cfg,
                     Phase phase) {
  return Session(mode, env, std::move(policy), std::move(maps), initial, cfg, phase);
}

void Session::log(std::string kind, nlohmann::json payload) {
  events_.push_back({state_.t, std::move(kind), std::move(payload)});
}

JointState Session::tracked_waypoint(std::size_t i) const {
  JointState w = state_.joints;
  for (Dof d : kinematics::kPlanningDofs) w[d] = plan_[i][d] + offset_[d];
  return kinematics::clamp_joints(w, env_.limits());
}

std::optional<JointState> Session::predicted_plan_end() const {
  if (plan_.empty()) return std::nullopt;
  return tracked_waypoint(plan_.size() - 1);
}

void Session::replan(const char* reason) {
  state_.blocked = false;
  if (!policy_) return;
  env_.reset_to(state_.joints);
  const rl::Trajectory t = rl::rollout(*policy_, env_, true);
  plan_ = t.joint_path();
  if (t.terminal() == rl::Terminal::collision) plan_.pop_back();
  offset_ = JointState{0, 0, 0, 0, 0, 0};
  state_.plan_index = 1;
  state_.manual_only = plan_.size() < 2;
  log("replan", {{"reason", reason},
                 {"waypoints", plan_.size()},
                 {"terminal", rl::to_string(t.terminal())},
                 {"manual_only", state_.manual_only}});
}

void Session::end_intervention_replan() {
  if (state_.mode != ControlMode::copilot) throw Error("replanning needs copilot mode");
  if (state_.intervening) log("intervention_end");
  state_.intervening = false;
  replan("intervention_end");
}

void Session::set_phase(Phase next) {
  if (!transition_allowed(state_.phase, next)) {
    log("phase_rejected", {{"from", to_string(state_.phase)}, {"to", to_string(next)}});
    throw Error("illegal phase transition " + std::string(to_string(state_.phase)) + " -> " +
                std::string(to_string(next)));
  }
  log("phase", {{"from", to_string(state_.phase)}, {"to", to_string(next)}});
  state_.phase = next;
  refresh_outputs(std::nullopt, 1.0);
}

void Session::set_mode(ControlMode mode) {
  if (mode == state_.mode) return;
  if (mode == ControlMode::copilot && (!policy_ || !maps_)) throw Error("copilot mode needs a policy and probability maps");
  log("mode", {{"from", to_string(state_.mode)}, {"to", to_string(mode)}});
  state_.mode = mode;
  if (mode == ControlMode::copilot) replan("mode_switch");
  refresh_outputs(std::nullopt, 1.0);
}

const SessionState& Session::tick(double dt, const std::optional<OperatorCommand>& cmd) {
  if (!(dt > 0.0)) throw Error("tick needs dt > 0");
  state_.t += dt;
  state_.total_time += dt;
  if (cmd) state_.intervention_time += dt;

  if (cmd) {
    const bool in_range = std::abs(cmd->velocity_fraction) <= 1.0;
    const DofSet allowed = allowed_dofs(state_.phase);
    bool ok = in_range && allowed.test(static_cast<std::size_t>(cmd->dof));
    if (cmd->coupled)
      ok = ok && (cmd->dof == Dof::sheath || cmd->dof == Dof::core) && allowed.test(static_cast<std::size_t>(Dof::sheath)) &&
           allowed.test(static_cast<std::size_t>(Dof::core));
    if (!ok) {
      log("rejected", {{"dof", kinematics::to_string(cmd->dof)},
                       {"velocity_fraction", cmd->velocity_fraction},
                       {"phase", to_string(state_.phase)},
                       {"reason", in_range ? "dof not allowed in phase" : "velocity_fraction out of range"}});
      return state_;
    }
  }

  const auto& limits = env_.limits();
  JointState next = state_.joints;
  if (cmd) {
    if (!state_.intervening) log("intervention_start", {{"dof", kinematics::to_string(cmd->dof)}});
    state_.intervening = true;
    last_command_t_ = state_.t;
  }

  // Nominal advance along the plan, synchronized across the planning DOFs.
  // Holds while the operator intervenes and never steps into the wall.
  const bool autonomous = state_.mode == ControlMode::copilot && state_.phase == Phase::localization &&
                          !state_.intervening && !state_.manual_only && state_.plan_index < plan_.size() &&
                          !state_.collision && !state_.success;
  if (autonomous) {
    const JointState target = tracked_waypoint(state_.plan_index);
    double needed = 0.0;
    for (Dof d : kinematics::kPlanningDofs) needed = std::max(needed, std::abs(target[d] - next[d]) / limits.velocity(d));
    JointState advanced = next;
    const bool reached = needed <= dt;
    for (Dof d : kinematics::kPlanningDofs) advanced[d] = reached ? target[d] : next[d] + dt / needed * (target[d] - next[d]);
    if (env_.collides(advanced)) {
      if (!state_.blocked) log("blocked", {{"waypoint", state_.plan_index}});
      state_.blocked = true;
    } else {
      state_.blocked = false;
      next = advanced;
      if (reached) ++state_.plan_index;
    }
  }

  double applied_scale = 1.0;
  if (cmd) {
    if (state_.mode == ControlMode::copilot && maps_)
      applied_scale = probmap::speed_scale(*maps_, state_.joints, cmd->dof, cmd->velocity_fraction,
                                           cfg_.governor.horizon * limits.velocity(cmd->dof), cfg_.governor);
    if (cmd->coupled) {
      const double v = std::min(limits.velocity(Dof::sheath), limits.velocity(Dof::core));
      next.sheath += cmd->velocity_fraction * v * applied_scale * dt;
      next.core += cmd->velocity_fraction * v * applied_scale * dt;
    } else {
      next[cmd->dof] += cmd->velocity_fraction * limits.velocity(cmd->dof) * applied_scale * dt;
    }
  }
  state_.joints = kinematics::clamp_joints(next, limits);

  if (!cmd && state_.intervening && state_.t - last_command_t_ >= cfg_.idle_replan - 1e-12) {
    if (state_.mode == ControlMode::copilot && state_.phase == Phase::localization) {
      end_intervention_replan();
    } else {
      log("intervention_end");
      state_.intervening = false;
    }
  }

  const CatheterShape shape = kinematics::forward_kinematics(state_.joints, env_.rig());
  const bool collided = anatomy::collision(env_.model(), shape, env_.config().wall_margin);
  if (collided && !state_.collision) log("collision", {{"joints", state_.joints.to_array()}});
  state_.collision = collided;
  if (state_.phase == Phase::localization && !state_.success && !collided && env_.is_success(shape.tip_pose())) {
    state_.success = true;
    log("success", {{"joints", state_.joints.to_array()}});
  }
  refresh_outputs(cmd, applied_scale);
  return state_;
}

void Session::refresh_outputs(const std::optional<OperatorCommand>& cmd, double applied_scale) {
  state_.tip = kinematics::tip_pose(state_.joints, env_.rig());
  state_.plan_size = plan_.size();
  state_.scales.fill(1.0);
  if (state_.mode == ControlMode::copilot && maps_) {
    std::array<double, kinematics::kDofCount> dir{};
    dir.fill(1.0);
    state_.scales = probmap::speed_scales(*maps_, state_.joints, dir, env_.limits(), cfg_.governor);
  }
  if (cmd) {
    state_.scales[static_cast<std::size_t>(cmd->dof)] = applied_scale;
    if (cmd->coupled) {
      state_.scales[static_cast<std::size_t>(Dof::sheath)] = applied_scale;
      state_.scales[static_cast<std::size_t>(Dof::core)] = applied_scale;
    }
  }
}

nlohmann::json to_json(const SessionEvent& e) { return {{"t", e.t}, {"kind", e.kind}, {"payload", e.payload}}; }

void Session::write_event_log(std::ostream& os) const {
  for (const auto& e : events_) os << to_json(e).dump() << '\n';
}

void CommandQueue::push(const OperatorCommand& cmd) {
  std::lock_guard lock(mu_);
  if (pending_) ++dropped_;
  pending_ = cmd;
}

CommandQueue::Drained CommandQueue::take_latest() {
  std::lock_guard lock(mu_);
  Drained d{pending_, dropped_};
  pending_.reset();
  dropped_ = 0;
  return d;
}

}  // namespace ttvr::copilot
