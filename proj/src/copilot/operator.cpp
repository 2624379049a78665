#include "ttvr/copilot/operator.hpp"

namespace ttvr::copilot {

namespace {

// Joint error below which a DOF counts as on goal (mm or deg).
constexpr double kGoalTolerance = 0.2;
// Seconds of motion checked for collision before committing to a DOF.
constexpr double kLookahead = 0.5;
// Proportional band: full speed beyond this many seconds from the goal.
constexpr double kSlowdown = 0.4;

std::size_t count_replans(const Session& s) {
  return static_cast<std::size_t>(std::count_if(s.events().begin(), s.events().end(),
                                                [](const SessionEvent& e) { return e.kind == "replan"; }));
}

}  // namespace

void OperatorProfile::validate() const {
  if (!(reaction_delay >= 0.0)) throw ConfigError("operator.reaction_delay", "must be >= 0");
  if (!(intervention_threshold > 0.0)) throw ConfigError("operator.intervention_threshold", "must be > 0");
  if (!(noise >= 0.0)) throw ConfigError("operator.noise", "must be >= 0");
}

ScriptedOperator::ScriptedOperator(OperatorProfile profile, const JointState& goal, std::uint64_t seed)
    : profile_(profile), goal_(goal), rng_(seed) {
  profile_.validate();
  for (Dof d : kinematics::kPlanningDofs) goal_[d] += profile_.error_bias;
}

OperatorCommand ScriptedOperator::make(Dof dof, double fraction, double t) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double noisy = fraction * (1.0 + profile_.noise * n(rng_));
  return {dof, std::clamp(noisy, -1.0, 1.0), t, false};
}

std::optional<OperatorCommand> ScriptedOperator::manual(const Session& session, const JointState& perceived) {
  const auto& env = session.env();
  const auto& limits = env.limits();
  std::array<Dof, 3> order = kinematics::kPlanningDofs;
  std::array<double, kinematics::kDofCount> ttg{};
  for (Dof d : order) ttg[static_cast<std::size_t>(d)] = std::abs(goal_[d] - perceived[d]) / limits.velocity(d);
  std::stable_sort(order.begin(), order.end(), [&](Dof a, Dof b) {
    return ttg[static_cast<std::size_t>(a)] > ttg[static_cast<std::size_t>(b)];
  });
  std::optional<Dof> fallback;
  for (Dof d : order) {
    const double err = goal_[d] - perceived[d];
    if (std::abs(err) <= kGoalTolerance) continue;
    if (!fallback) fallback = d;
    JointState probe = session.state().joints;
    probe[d] += std::copysign(std::min(std::abs(err), kLookahead * limits.velocity(d)), err);
    if (env.collides(kinematics::clamp_joints(probe, limits))) continue;
    return make(d, std::clamp(err / (kSlowdown * limits.velocity(d)), -1.0, 1.0), session.state().t);
  }
  if (!fallback) return std::nullopt;
  const double err = goal_[*fallback] - perceived[*fallback];
  return make(*fallback, std::clamp(err / (kSlowdown * limits.velocity(*fallback)), -1.0, 1.0), session.state().t);
}

std::optional<OperatorCommand> ScriptedOperator::next(const Session& session) {
  const SessionState& s = session.state();
  if (s.success || s.collision || s.phase != Phase::localization) return std::nullopt;

  history_.emplace_back(s.t, s.joints);
  while (history_.size() > 1 && history_[1].first <= s.t - profile_.reaction_delay + 1e-12) history_.pop_front();
  const JointState perceived = history_.front().second;

  if (s.mode == ControlMode::master_slave) return manual(session, perceived);

  const std::size_t replans = count_replans(session);
  if (replans != replans_seen_) {
    replans_seen_ = replans;
    waiting_for_replan_ = false;
    trigger_since_.reset();
  }
  if (s.manual_only || s.plan_index >= s.plan_size) return manual(session, perceived);

  if (burst_) {
    const double moved = std::abs(s.joints[burst_->dof] - last_joint_);
    last_joint_ = s.joints[burst_->dof];
    burst_->remaining -= moved;
    if (burst_->remaining > kGoalTolerance) {
      const double v = session.env().limits().velocity(burst_->dof);
      return make(burst_->dof, burst_->direction * std::min(1.0, burst_->remaining / (kSlowdown * v)), s.t);
    }
    burst_.reset();
    waiting_for_replan_ = true;
    return std::nullopt;
  }
  if (waiting_for_replan_) return std::nullopt;

  const auto end = session.predicted_plan_end();
  const double lateral = session.env().target().lateral(kinematics::tip_pose(*end, session.env().rig()).position);
  if (lateral <= profile_.intervention_threshold) {
    trigger_since_.reset();
    return std::nullopt;
  }
  if (!trigger_since_) trigger_since_ = s.t;
  if (s.t - *trigger_since_ < profile_.reaction_delay - 1e-12) return std::nullopt;

  // Correct the DOF whose predicted end value is furthest from the goal.
  const auto& limits = session.env().limits();
  Dof worst = Dof::translation;
  double worst_ttg = -1.0;
  for (Dof d : kinematics::kPlanningDofs) {
    const double ttg = std::abs(goal_[d] - (*end)[d]) / limits.velocity(d);
    if (ttg > worst_ttg) worst_ttg = ttg, worst = d;
  }
  const double delta = goal_[worst] - (*end)[worst];
  trigger_since_.reset();
  if (std::abs(delta) <= kGoalTolerance) {
    waiting_for_replan_ = true;
    return make(worst, 0.0, s.t);
  }
  burst_ = Burst{worst, delta > 0 ? 1.0 : -1.0, std::abs(delta)};
  last_joint_ = s.joints[worst];
  return make(worst, burst_->direction * std::min(1.0, burst_->remaining / (kSlowdown * limits.velocity(worst))), s.t);
}

}  // namespace ttvr::copilot
