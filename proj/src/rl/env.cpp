#include "ttvr/rl/env.hpp"

namespace ttvr::rl {

void EnvConfig::validate() const {
  if (max_steps < 1) throw ConfigError("env.max_steps", "must be >= 1");
  for (double s : action_scale)
    if (!(s > 0.0)) throw ConfigError("env.action_scale", "entries must be > 0");
  if (!(success_pos_tol > 0.0)) throw ConfigError("env.success_pos_tol", "must be > 0");
  if (!(success_ang_tol > 0.0)) throw ConfigError("env.success_ang_tol", "must be > 0");
  if (!(wall_margin >= 0.0)) throw ConfigError("env.wall_margin", "must be >= 0");
  if (!(r_step < 0.0)) throw ConfigError("env.r_step", "must be < 0");
  if (!(r_obstacle < 0.0)) throw ConfigError("env.r_obstacle", "must be < 0");
  if (!(r_target > 0.0)) throw ConfigError("env.r_target", "must be > 0");
  if (!(error_weight >= 0.0)) throw ConfigError("env.error_weight", "must be >= 0");
}

InitDistribution InitDistribution::fixed(const JointState& nominal) {
  InitDistribution d;
  d.nominal = nominal;
  d.translation = d.rotation = d.bending = {0.0, 0.0};
  return d;
}

std::string_view to_string(Terminal t) {
  switch (t) {
    case Terminal::running: return "running";
    case Terminal::collision: return "collision";
    case Terminal::timeout: return "timeout";
    case Terminal::max_bend: return "max_bend";
    case Terminal::success: return "success";
  }
  return "?";
}

double error_term(const TipPose& tip, const anatomy::ValveTarget& target, const EnvConfig& cfg) {
  double sum = 0.0;
  for (const Vec3& p : {target.p1, target.p2}) {
    const Vec3 d = p - tip.position;
    sum += (d - d.dot(tip.axis) * tip.axis).norm();
  }
  return -cfg.error_weight * sum;
}

RewardBreakdown reward(const TipPose& tip, const anatomy::ValveTarget& target, Terminal terminal,
                       const EnvConfig& cfg) {
  RewardBreakdown r;
  r.step = cfg.r_step;
  switch (terminal) {
    case Terminal::running: break;
    case Terminal::collision: r.obstacle = cfg.r_obstacle; break;
    case Terminal::timeout:
    case Terminal::max_bend: r.error = error_term(tip, target, cfg); break;
    case Terminal::success:
      r.target = cfg.r_target;
      r.error = error_term(tip, target, cfg);
      break;
  }
  return r;
}

Observation observe(const JointState& joints, const JointLimits& limits, const kinematics::RigGeometry& rig,
                    const anatomy::ValveTarget& target) {
  const CatheterShape shape = kinematics::forward_kinematics(joints, rig);
  const Mat3& R = shape.tip_frame.rotation;
  const Vec3 a = R.transpose() * (target.p1 - shape.tip_frame.position);
  const Vec3 b = R.transpose() * (target.p2 - shape.tip_frame.position);
  return {limits.normalize(Dof::translation, joints.translation),
          limits.normalize(Dof::rotation, joints.rotation),
          limits.normalize(Dof::bending, joints.bending),
          a.x(), a.y(), a.z(), b.x(), b.y(), b.z()};
}

LocalizationEnv::LocalizationEnv(anatomy::HeartModel model, anatomy::ValveTarget target, JointLimits limits,
                                 EnvConfig cfg, InitDistribution init, kinematics::RigGeometry rig,
                                 std::uint64_t seed)
    : model_(std::move(model)),
      target_(target),
      limits_(limits),
      cfg_(cfg),
      init_(init),
      rig_(rig),
      rng_(seed) {}

LocalizationEnv make_env(const anatomy::HeartModel& model, const anatomy::ValveTarget& target,
                         const JointLimits& limits, const EnvConfig& cfg, const InitDistribution& init,
                         kinematics::RigGeometry rig, std::uint64_t seed) {
  cfg.validate();
  limits.validate();
  if (!model.contains(target.p1) || !model.contains(target.p2))
    throw Error("valve target lies outside the heart model");
  rig.port = model.insertion_port();
  return LocalizationEnv(model, target, limits, cfg, init, rig, seed);
}

bool LocalizationEnv::collides(const JointState& joints) const {
  return anatomy::collision(model_, kinematics::forward_kinematics(joints, rig_), cfg_.wall_margin);
}

double LocalizationEnv::potential(const JointState& joints) const {
  const TipPose tip = kinematics::tip_pose(joints, rig_);
  const double angle = std::acos(std::clamp(tip.axis.dot(target_.axis), -1.0, 1.0));
  return -((tip.position - target_.p2).norm() + 50.0 * angle);
}

Observation LocalizationEnv::reset() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const kinematics::Interval& iv) { return iv.min + unit(rng_) * iv.width(); };
  for (int attempt = 0; attempt < 100; ++attempt) {
    JointState j = init_.nominal;
    j.translation += draw(init_.translation);
    j.rotation += draw(init_.rotation);
    j.bending += draw(init_.bending);
    j = kinematics::clamp_joints(j, limits_);
    if (!collides(j)) return reset_to(j);
  }
  throw Error("initial state in collision after 100 redraws");
}

Observation LocalizationEnv::reset_to(const JointState& joints) {
  joints_ = kinematics::clamp_joints(joints, limits_);
  steps_ = 0;
  terminal_ = Terminal::running;
  return observe();
}

Observation LocalizationEnv::observe() const { return rl::observe(joints_, limits_, rig_, target_); }

bool LocalizationEnv::is_success(const TipPose& tip) const {
  const double angle = rad2deg(std::acos(std::clamp(tip.axis.dot(target_.axis), -1.0, 1.0)));
  return target_.axial(tip.position) >= 0.0 && target_.lateral(tip.position) <= cfg_.success_pos_tol &&
         angle <= cfg_.success_ang_tol;
}

StepOutcome LocalizationEnv::step(const Action& action) {
  if (terminal_ != Terminal::running) throw Error("step after terminal");
  const double bend_max = limits_[Dof::bending].max;
  JointState next = joints_;
  for (int k = 0; k < kActionSize; ++k) {
    const double a = std::clamp(action[k], -1.0, 1.0);
    next[kinematics::kPlanningDofs[k]] += a * cfg_.action_scale[k];
  }
  joints_ = kinematics::clamp_joints(next, limits_);
  ++steps_;

  const CatheterShape shape = kinematics::forward_kinematics(joints_, rig_);
  const TipPose tip = shape.tip_pose();
  if (anatomy::collision(model_, shape, cfg_.wall_margin))
    terminal_ = Terminal::collision;
  else if (is_success(tip))
    terminal_ = Terminal::success;
  else if (joints_.bending >= bend_max)
    terminal_ = Terminal::max_bend;
  else if (steps_ >= cfg_.max_steps)
    terminal_ = Terminal::timeout;

  StepOutcome out;
  out.observation = observe();
  out.reward = reward(tip, target_, terminal_, cfg_);
  out.terminal = terminal_;
  out.joints = joints_;
  return out;
}

}  // namespace ttvr::rl
