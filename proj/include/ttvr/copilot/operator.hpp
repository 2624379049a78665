#pragma once

#include "ttvr/copilot/session.hpp"

#include <deque>

namespace ttvr::copilot {

/// Synthetic operator used for desk-scale comparisons of control modes.
struct OperatorProfile {
  double reaction_delay = 0.3;          // s between seeing a state and acting on it
  double error_bias = 0.0;              // added to every goal coordinate (mm or deg)
  double intervention_threshold = 5.0;  // mm of predicted lateral error that triggers a copilot intervention
  double noise = 0.05;                  // relative std of commanded velocity
  void validate() const;
};

/// Deterministic per seed. Master-slave: drives one DOF at a time towards the
/// goal, skipping moves whose short lookahead collides. Copilot: watches the
/// predicted end of the nominal plan and, when its lateral error exceeds the
/// threshold for longer than the reaction delay, nudges the worst DOF by the
/// perceived correction and lets go; takes over manually if the plan runs out
/// without success.
class ScriptedOperator {
 public:
  ScriptedOperator(OperatorProfile profile, const JointState& goal, std::uint64_t seed);

  std::optional<OperatorCommand> next(const Session& session);

 private:
  std::optional<OperatorCommand> manual(const Session& session, const JointState& perceived);
  OperatorCommand make(Dof dof, double fraction, double t);

  OperatorProfile profile_;
  JointState goal_;
  std::mt19937_64 rng_;
  std::deque<std::pair<double, JointState>> history_;
  std::optional<double> trigger_since_;
  struct Burst {
    Dof dof;
    double direction;
    double remaining;  // units still to move
  };
  std::optional<Burst> burst_;
  double last_joint_ = 0.0;
  std::size_t replans_seen_ = 0;
  bool waiting_for_replan_ = false;
};

}  // namespace ttvr::copilot
