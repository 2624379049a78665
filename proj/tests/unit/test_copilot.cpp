#include "ttvr/copilot/operator.hpp"
#include "ttvr/kinematics/ik.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>
#include <thread>

using namespace ttvr;
using namespace ttvr::copilot;

namespace {

constexpr double kDt = 0.02;

const rl::LocalizationEnv& env() {
  static const rl::LocalizationEnv e = fixtures::default_env();
  return e;
}

JointState nominal() { return env().init_distribution().nominal; }

Session master(Phase phase = Phase::localization, const JointState& initial = nominal()) {
  return Session(ControlMode::master_slave, env(), nullptr, nullptr, initial, {}, phase);
}

Session copiloted(const JointState& initial = nominal(), SessionConfig cfg = {}) {
  return Session(ControlMode::copilot, env(), fixtures::trained_policy(), fixtures::trained_maps(), initial, cfg,
                 Phase::localization);
}

OperatorCommand cmd(Dof dof, double fraction, bool coupled = false) {
  OperatorCommand c;
  c.dof = dof;
  c.velocity_fraction = fraction;
  c.coupled = coupled;
  return c;
}

std::size_t count(const Session& s, const std::string& kind) {
  return static_cast<std::size_t>(
      std::count_if(s.events().begin(), s.events().end(), [&](const SessionEvent& e) { return e.kind == kind; }));
}

// A mid-workspace localization state, clear of the joint limits.
JointState mid_state() {
  JointState j = nominal();
  j.translation = 60.0;
  j.rotation = 10.0;
  j.bending = 40.0;
  return j;
}

}  // namespace

TEST(Phase, AllowedDofsPerPhase) {
  auto set = [](std::initializer_list<Dof> l) {
    DofSet s;
    for (Dof d : l) s.set(static_cast<std::size_t>(d));
    return s;
  };
  EXPECT_EQ(allowed_dofs(Phase::initialization), set({Dof::translation, Dof::rotation}));
  EXPECT_EQ(allowed_dofs(Phase::localization), set({Dof::translation, Dof::rotation, Dof::bending}));
  EXPECT_EQ(allowed_dofs(Phase::releasing), set({Dof::sheath, Dof::core}));
  EXPECT_EQ(allowed_dofs(Phase::anchoring), DofSet{});
  EXPECT_EQ(allowed_dofs(Phase::retraction), set({Dof::translation, Dof::sheath, Dof::core}));
}

TEST(Phase, TransitionRules) {
  EXPECT_TRUE(transition_allowed(Phase::initialization, Phase::localization));
  EXPECT_TRUE(transition_allowed(Phase::localization, Phase::releasing));
  EXPECT_TRUE(transition_allowed(Phase::releasing, Phase::anchoring));
  EXPECT_TRUE(transition_allowed(Phase::anchoring, Phase::retraction));
  EXPECT_FALSE(transition_allowed(Phase::localization, Phase::anchoring));
  EXPECT_FALSE(transition_allowed(Phase::localization, Phase::initialization));
  EXPECT_FALSE(transition_allowed(Phase::localization, Phase::localization));
  for (Phase p : {Phase::initialization, Phase::localization, Phase::releasing, Phase::anchoring})
    EXPECT_TRUE(transition_allowed(p, Phase::retraction));
  EXPECT_FALSE(transition_allowed(Phase::retraction, Phase::retraction));
}

TEST(Phase, NamesRoundTrip) {
  for (Phase p : {Phase::initialization, Phase::localization, Phase::releasing, Phase::anchoring, Phase::retraction})
    EXPECT_EQ(parse_phase(to_string(p)), p);
  EXPECT_FALSE(parse_phase("docking").has_value());
  EXPECT_EQ(parse_mode("copilot"), ControlMode::copilot);
  EXPECT_EQ(parse_mode("master_slave"), ControlMode::master_slave);
  EXPECT_FALSE(parse_mode("auto").has_value());
}

TEST(Phase, IllegalTransitionIsRejectedAndLogged) {
  Session s = master(Phase::localization);
  EXPECT_THROW(s.set_phase(Phase::anchoring), Error);
  EXPECT_EQ(s.state().phase, Phase::localization);
  EXPECT_EQ(count(s, "phase_rejected"), 1u);
  s.set_phase(Phase::releasing);
  EXPECT_EQ(s.state().phase, Phase::releasing);
  s.set_phase(Phase::retraction);
  EXPECT_EQ(s.state().phase, Phase::retraction);
}

TEST(MasterSlave, NoPlanAndNoCommandHolds) {
  Session s = master();
  EXPECT_TRUE(s.plan().empty());
  const JointState before = s.state().joints;
  for (int i = 0; i < 50; ++i) s.tick(kDt);
  EXPECT_EQ(s.state().joints, before);
  EXPECT_NEAR(s.state().total_time, 50 * kDt, 1e-12);
  EXPECT_EQ(s.state().intervention_time, 0.0);
  for (double v : s.state().scales) EXPECT_EQ(v, 1.0);
}

TEST(MasterSlave, CommandMovesOnlyItsDofUnscaled) {
  Session s = master(Phase::localization, mid_state());
  const auto& limits = env().limits();
  for (Dof d : kinematics::kPlanningDofs) {
    const JointState before = s.state().joints;
    s.tick(kDt, cmd(d, -0.6));
    for (Dof o : kinematics::kAllDofs) {
      const double expected = o == d ? before[o] - 0.6 * limits.velocity(d) * kDt : before[o];
      EXPECT_NEAR(s.state().joints[o], expected, 1e-12) << kinematics::to_string(d);
    }
  }
}

TEST(MasterSlave, DisallowedDofIsRejected) {
  Session s = master(Phase::localization, mid_state());
  const JointState before = s.state().joints;
  s.tick(kDt, cmd(Dof::sheath, 1.0));
  EXPECT_EQ(s.state().joints, before);
  EXPECT_EQ(count(s, "rejected"), 1u);
  EXPECT_EQ(s.events().back().payload.at("reason"), "dof not allowed in phase");
  s.tick(kDt, cmd(Dof::bending, 1.5));
  EXPECT_EQ(s.state().joints, before);
  EXPECT_EQ(count(s, "rejected"), 2u);
}

TEST(MasterSlave, AnchoringRejectsEveryDof) {
  Session s = master(Phase::anchoring);
  const JointState before = s.state().joints;
  for (Dof d : kinematics::kAllDofs) s.tick(kDt, cmd(d, 0.5));
  EXPECT_EQ(s.state().joints, before);
  EXPECT_EQ(count(s, "rejected"), kinematics::kDofCount);
}

TEST(MasterSlave, CoupledSheathAndCoreInReleasing) {
  JointState start = mid_state();
  start.sheath = 20.0;
  start.core = 20.0;
  Session s = master(Phase::releasing, start);
  const auto& limits = env().limits();
  const double v = std::min(limits.velocity(Dof::sheath), limits.velocity(Dof::core));
  s.tick(kDt, cmd(Dof::sheath, 0.5, true));
  EXPECT_NEAR(s.state().joints.sheath, 20.0 + 0.5 * v * kDt, 1e-12);
  EXPECT_NEAR(s.state().joints.core, 20.0 + 0.5 * v * kDt, 1e-12);
  Session loc = master(Phase::localization, start);
  const JointState held = loc.state().joints;
  loc.tick(kDt, cmd(Dof::translation, 0.5, true));
  EXPECT_EQ(loc.state().joints, held);
  EXPECT_EQ(count(loc, "rejected"), 1u);
}

TEST(MasterSlave, BadDtThrows) {
  Session s = master();
  EXPECT_THROW(s.tick(0.0), Error);
  EXPECT_THROW(s.tick(-0.1), Error);
}

TEST(Properties, AccountingAndPhaseGating) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dof(0, 5);
  for (int trial = 0; trial < 5; ++trial) {
    Session s = master(Phase::initialization, mid_state());
    double total = 0.0, intervention = 0.0;
    for (int i = 0; i < 400; ++i) {
      if (i % 80 == 79 && s.state().phase != Phase::retraction) {
        const Phase next = static_cast<Phase>(static_cast<int>(s.state().phase) + 1);
        s.set_phase(next);
      }
      const double dt = 0.005 + 0.03 * u(rng);
      std::optional<OperatorCommand> c;
      if (u(rng) < 0.6) c = cmd(static_cast<Dof>(dof(rng)), 2.0 * u(rng) - 1.0);
      const JointState before = s.state().joints;
      const DofSet allowed = allowed_dofs(s.state().phase);
      s.tick(dt, c);
      total += dt;
      if (c) intervention += dt;
      for (Dof d : kinematics::kAllDofs)
        if (!allowed.test(static_cast<std::size_t>(d))) {
          EXPECT_EQ(s.state().joints[d], before[d]);
        }
      EXPECT_TRUE(env().limits().contains(s.state().joints));
      EXPECT_LE(s.state().intervention_time, s.state().total_time + 1e-12);
    }
    EXPECT_NEAR(s.state().total_time, total, 1e-9);
    EXPECT_NEAR(s.state().intervention_time, intervention, 1e-9);
  }
}

TEST(Properties, MasterSlaveIgnoresPolicyAndMaps) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> dof(0, 2);
  Session plain = master(Phase::localization, mid_state());
  Session equipped(ControlMode::master_slave, env(), fixtures::trained_policy(), fixtures::trained_maps(), mid_state(),
                   {}, Phase::localization);
  for (int i = 0; i < 300; ++i) {
    std::optional<OperatorCommand> c;
    if (i % 3 != 0) c = cmd(kinematics::kPlanningDofs[static_cast<std::size_t>(dof(rng))], u(rng));
    plain.tick(kDt, c);
    equipped.tick(kDt, c);
  }
  EXPECT_EQ(plain.state().joints, equipped.state().joints);
  EXPECT_TRUE(equipped.plan().empty());
}

TEST(Copilot, NeedsPolicyAndMaps) {
  EXPECT_THROW(Session(ControlMode::copilot, env(), nullptr, fixtures::trained_maps(), nominal()), Error);
  EXPECT_THROW(Session(ControlMode::copilot, env(), fixtures::trained_policy(), nullptr, nominal()), Error);
  Session s = master();
  EXPECT_THROW(s.end_intervention_replan(), Error);
}

TEST(Copilot, PlanStartsAtTheIdealInitialState) {
  Session s = copiloted();
  ASSERT_GE(s.plan().size(), 2u);
  EXPECT_EQ(s.plan().front(), nominal());
  EXPECT_EQ(s.state().plan_index, 1u);
  EXPECT_EQ(count(s, "plan"), 1u);
}

TEST(Copilot, AutonomousAdvanceIsSpeedLimitedAndSucceeds) {
  Session s = copiloted();
  const auto& limits = env().limits();
  for (int i = 0; i < 5000 && !s.state().success; ++i) {
    const JointState before = s.state().joints;
    s.tick(kDt);
    for (Dof d : kinematics::kAllDofs)
      EXPECT_LE(std::abs(s.state().joints[d] - before[d]), limits.velocity(d) * kDt + 1e-9);
    ASSERT_FALSE(s.state().collision);
  }
  EXPECT_TRUE(s.state().success);
  EXPECT_EQ(s.state().intervention_time, 0.0);
}

TEST(Copilot, OffsetInitialStateTracksThePlan) {
  JointState start = nominal();
  start.translation += 5.0;
  start.rotation -= 4.0;
  Session s = copiloted(start);
  EXPECT_NEAR(s.plan_offset().translation, 5.0, 1e-12);
  EXPECT_NEAR(s.plan_offset().rotation, -4.0, 1e-12);
  for (int i = 0; i < 5000 && s.state().plan_index < s.plan().size() && !s.state().success && !s.state().collision;
       ++i)
    s.tick(kDt);
  ASSERT_FALSE(s.state().collision);
  if (s.state().success) return;
  const auto end = s.predicted_plan_end();
  ASSERT_TRUE(end.has_value());
  if (!s.state().blocked) {
    for (Dof d : kinematics::kPlanningDofs) EXPECT_NEAR(s.state().joints[d], (*end)[d], 1e-9);
  }
}

TEST(Copilot, CommandTowardsDensityMovesAtFullSpeed) {
  Session s = copiloted(mid_state());
  const auto& limits = env().limits();
  const auto& maps = *fixtures::trained_maps();
  int checked = 0;
  for (Dof d : kinematics::kPlanningDofs) {
    for (double sign : {1.0, -1.0}) {
      const JointState at = s.state().joints;
      const double scale = probmap::speed_scale(maps, at, d, sign, limits.velocity(d), {});
      if (scale != 1.0) continue;
      s.tick(kDt, cmd(d, 0.5 * sign));
      for (Dof o : kinematics::kAllDofs) {
        const double expected = o == d ? at[o] + 0.5 * sign * limits.velocity(d) * kDt : at[o];
        EXPECT_NEAR(s.state().joints[o], expected, 1e-12);
      }
      EXPECT_EQ(s.state().scales[static_cast<std::size_t>(d)], 1.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Copilot, CommandIntoLowDensityIsHeldAtTheFloor) {
  const auto& limits = env().limits();
  const auto& maps = *fixtures::trained_maps();
  // Search the workspace for a state where a bending command is floored.
  std::optional<std::pair<JointState, double>> found;
  for (double t = 20.0; t <= 200.0 && !found; t += 10.0)
    for (double b = 5.0; b <= 150.0 && !found; b += 5.0)
      for (double sign : {1.0, -1.0}) {
        JointState j = mid_state();
        j.translation = t;
        j.bending = b;
        if (probmap::speed_scale(maps, j, Dof::bending, sign, limits.velocity(Dof::bending), {}) == 0.20) {
          found = {j, sign};
          break;
        }
      }
  ASSERT_TRUE(found.has_value());
  Session s = copiloted(found->first);
  const JointState before = s.state().joints;
  s.tick(kDt, cmd(Dof::bending, 0.8 * found->second));
  EXPECT_NEAR(s.state().joints.bending - before.bending, 0.20 * 0.8 * found->second * limits.velocity(Dof::bending) * kDt,
              1e-12);
  EXPECT_EQ(s.state().joints.translation, before.translation);
  EXPECT_EQ(s.state().joints.rotation, before.rotation);
  EXPECT_DOUBLE_EQ(s.state().scales[static_cast<std::size_t>(Dof::bending)], 0.20);
}

TEST(Properties, GovernorContainment) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& limits = env().limits();
  const double floor = SessionConfig{}.governor.floor;
  for (int trial = 0; trial < 60; ++trial) {
    JointState j = mid_state();
    j.translation = 30.0 + 150.0 * u(rng);
    j.rotation = -150.0 + 300.0 * u(rng);
    j.bending = 10.0 + 140.0 * u(rng);
    Session s = copiloted(j);
    const Dof d = kinematics::kPlanningDofs[static_cast<std::size_t>(trial % 3)];
    const double vf = 2.0 * u(rng) - 1.0;
    const JointState before = s.state().joints;
    s.tick(kDt, cmd(d, vf));
    const double moved = std::abs(s.state().joints[d] - before[d]);
    const double full = std::abs(vf) * limits.velocity(d) * kDt;
    EXPECT_LE(moved, full + 1e-12);
    EXPECT_GE(moved, floor * full - 1e-12);
    for (Dof o : kinematics::kAllDofs)
      if (o != d) {
        EXPECT_EQ(s.state().joints[o], before[o]);
      }
  }
}

TEST(Copilot, IdleCommandStreamEndsInterventionWithOneReplan) {
  SessionConfig cfg;
  cfg.idle_replan = 0.5;
  Session s = copiloted(nominal(), cfg);
  for (int i = 0; i < 10; ++i) s.tick(kDt);
  s.tick(kDt, cmd(Dof::rotation, 0.5));
  EXPECT_TRUE(s.state().intervening);
  EXPECT_EQ(count(s, "intervention_start"), 1u);
  int idle = 0;
  while (s.state().intervening) {
    s.tick(kDt);
    ++idle;
    ASSERT_LT(idle, 100);
  }
  EXPECT_EQ(idle, 25);
  EXPECT_EQ(count(s, "replan"), 1u);
  EXPECT_EQ(count(s, "intervention_end"), 1u);
  ASSERT_FALSE(s.plan().empty());
  for (Dof d : kinematics::kPlanningDofs) EXPECT_EQ(s.plan().front()[d], s.state().joints[d]);
}

TEST(Copilot, ReplanFromAPlanWaypointReproducesTheTail) {
  Session s = copiloted();
  const auto old_plan = s.plan();
  ASSERT_GE(old_plan.size(), 3u);
  while (s.state().plan_index < 2) s.tick(kDt);
  ASSERT_EQ(s.state().joints, old_plan[1]);
  s.end_intervention_replan();
  const auto& fresh = s.plan();
  ASSERT_EQ(fresh.size(), old_plan.size() - 1);
  for (std::size_t i = 0; i < fresh.size(); ++i)
    for (Dof d : kinematics::kAllDofs) EXPECT_NEAR(fresh[i][d], old_plan[i + 1][d], 1e-9);
  EXPECT_EQ(count(s, "replan"), 1u);
}

TEST(Copilot, ModeSwitches) {
  Session s = Session(ControlMode::master_slave, env(), fixtures::trained_policy(), fixtures::trained_maps(), nominal(),
                      {}, Phase::localization);
  s.set_mode(ControlMode::copilot);
  EXPECT_EQ(count(s, "replan"), 1u);
  EXPECT_FALSE(s.plan().empty());
  s.tick(kDt);
  EXPECT_NE(s.state().joints, nominal());
  s.set_mode(ControlMode::master_slave);
  const JointState held = s.state().joints;
  s.tick(kDt);
  EXPECT_EQ(s.state().joints, held);
  for (double v : s.state().scales) EXPECT_EQ(v, 1.0);
}

TEST(Queue, LatestWinsAndDropsAreCounted) {
  CommandQueue q;
  EXPECT_FALSE(q.take_latest().command.has_value());
  for (int i = 0; i < 3; ++i) {
    OperatorCommand c = cmd(Dof::rotation, 0.1 * i);
    c.seq = i;
    q.push(c);
  }
  const auto d = q.take_latest();
  ASSERT_TRUE(d.command.has_value());
  EXPECT_EQ(d.command->seq, 2);
  EXPECT_EQ(d.dropped, 2u);
  const auto e = q.take_latest();
  EXPECT_FALSE(e.command.has_value());
  EXPECT_EQ(e.dropped, 0u);
}

TEST(Queue, ConcurrentProducersLoseNothingUnaccounted) {
  CommandQueue q;
  std::vector<std::thread> producers;
  for (int p = 0; p < 4; ++p)
    producers.emplace_back([&q, p] {
      for (int i = 0; i < 1000; ++i) {
        OperatorCommand c = cmd(Dof::translation, 0.0);
        c.seq = p * 1000 + i;
        q.push(c);
      }
    });
  std::size_t taken = 0, dropped = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto d = q.take_latest();
    taken += d.command ? 1 : 0;
    dropped += d.dropped;
  }
  for (auto& t : producers) t.join();
  const auto d = q.take_latest();
  taken += d.command ? 1 : 0;
  dropped += d.dropped;
  EXPECT_EQ(taken + dropped, 4000u);
}

namespace {

struct Outcome {
  std::vector<std::optional<OperatorCommand>> commands;
  SessionState final;
};

Outcome drive(ControlMode mode, const OperatorProfile& profile, std::uint64_t seed, const JointState& start,
              double time_limit = 120.0) {
  const auto goal = kinematics::solve_alignment(env().rig(), env().limits(), env().target(), 5.0);
  Session s(mode, env(), fixtures::trained_policy(), fixtures::trained_maps(), start, {}, Phase::localization);
  ScriptedOperator op(profile, goal.joints, seed);
  Outcome o;
  while (s.state().t < time_limit && !s.state().success && !s.state().collision) {
    o.commands.push_back(op.next(s));
    s.tick(kDt, o.commands.back());
  }
  o.final = s.state();
  return o;
}

bool same(const std::optional<OperatorCommand>& a, const std::optional<OperatorCommand>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->dof == b->dof && a->velocity_fraction == b->velocity_fraction && a->timestamp == b->timestamp;
}

}  // namespace

TEST(ScriptedOperator, InvalidProfileThrows) {
  OperatorProfile p;
  p.intervention_threshold = 0.0;
  EXPECT_THROW(ScriptedOperator(p, nominal(), 1), ConfigError);
  p = {};
  p.reaction_delay = -1.0;
  EXPECT_THROW(ScriptedOperator(p, nominal(), 1), ConfigError);
}

TEST(ScriptedOperator, SameSeedSameCommandStream) {
  OperatorProfile p;
  p.noise = 0.1;
  const auto a = drive(ControlMode::master_slave, p, 77, nominal(), 20.0);
  const auto b = drive(ControlMode::master_slave, p, 77, nominal(), 20.0);
  ASSERT_EQ(a.commands.size(), b.commands.size());
  for (std::size_t i = 0; i < a.commands.size(); ++i) EXPECT_TRUE(same(a.commands[i], b.commands[i])) << i;
  EXPECT_EQ(a.final.joints, b.final.joints);
}

TEST(ScriptedOperator, IdealMasterSlaveOperatorReachesTheValve) {
  OperatorProfile p;
  p.reaction_delay = 0.0;
  p.error_bias = 0.0;
  p.noise = 0.0;
  const auto o = drive(ControlMode::master_slave, p, 3, nominal());
  EXPECT_TRUE(o.final.success);
  EXPECT_FALSE(o.final.collision);
}

TEST(ScriptedOperator, InfiniteThresholdNeverIntervenes) {
  OperatorProfile p;
  p.intervention_threshold = 1e12;
  const auto o = drive(ControlMode::copilot, p, 3, nominal());
  EXPECT_TRUE(o.final.success);
  EXPECT_EQ(o.final.intervention_time, 0.0);
  EXPECT_TRUE(std::none_of(o.commands.begin(), o.commands.end(), [](const auto& c) { return c.has_value(); }));
}
