#include "ttvr/rl/rollout.hpp"

namespace ttvr::rl {

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward.total();
  return sum;
}

std::vector<JointState> Trajectory::joint_path() const {
  std::vector<JointState> path{initial};
  for (const auto& s : steps) path.push_back(s.joints);
  return path;
}

Trajectory rollout(const Controller& controller, LocalizationEnv& env) {
  Trajectory t;
  t.initial = env.joints();
  Observation obs = env.observe();
  while (env.terminal() == Terminal::running) {
    const Action a = controller(obs, env);
    t.actions.push_back(a);
    t.steps.push_back(env.step(a));
    obs = t.steps.back().observation;
  }
  return t;
}

Trajectory rollout(const Policy& policy, LocalizationEnv& env, bool deterministic, std::mt19937_64* rng) {
  return rollout([&](const Observation& obs, const LocalizationEnv&) { return policy.act(obs, deterministic, rng); },
                 env);
}

RolloutRecord summarize(const Trajectory& t, const LocalizationEnv& env) {
  RolloutRecord r;
  r.terminal = t.terminal();
  r.length = static_cast<int>(t.steps.size());
  r.total_reward = t.total_reward();
  r.initial = t.initial;
  r.final_state = t.steps.empty() ? t.initial : t.steps.back().joints;
  const TipPose tip = kinematics::tip_pose(r.final_state, env.rig());
  r.position_error = env.target().lateral(tip.position);
  r.orientation_error = rad2deg(std::acos(std::clamp(tip.axis.dot(env.target().axis), -1.0, 1.0)));
  return r;
}

LocalizationStats aggregate(std::vector<RolloutRecord> records) {
  LocalizationStats s;
  const double n = static_cast<double>(records.size());
  if (records.empty()) return s;
  std::size_t successes = 0;
  for (const auto& r : records) {
    s.position_mean += r.position_error;
    s.orientation_mean += r.orientation_error;
    s.position_max = std::max(s.position_max, r.position_error);
    s.orientation_max = std::max(s.orientation_max, r.orientation_error);
    if (r.terminal == Terminal::success) ++successes;
  }
  s.position_mean /= n;
  s.orientation_mean /= n;
  s.success_rate = static_cast<double>(successes) / n;
  if (records.size() > 1) {
    for (const auto& r : records) {
      s.position_std += std::pow(r.position_error - s.position_mean, 2);
      s.orientation_std += std::pow(r.orientation_error - s.orientation_mean, 2);
    }
    s.position_std = std::sqrt(s.position_std / (n - 1));
    s.orientation_std = std::sqrt(s.orientation_std / (n - 1));
  }
  s.records = std::move(records);
  return s;
}

LocalizationStats evaluate(const Controller& controller, LocalizationEnv& env, int n, std::uint64_t seed) {
  if (n < 1) throw Error("evaluate needs n >= 1");
  env.reseed(seed);
  std::vector<RolloutRecord> records;
  for (int i = 0; i < n; ++i) {
    env.reset();
    records.push_back(summarize(rollout(controller, env), env));
  }
  return aggregate(std::move(records));
}

LocalizationStats evaluate(const Policy& policy, LocalizationEnv& env, int n, std::uint64_t seed) {
  return evaluate([&](const Observation& obs, const LocalizationEnv&) { return policy.act(obs, true); }, env, n,
                  seed);
}

}  // namespace ttvr::rl
