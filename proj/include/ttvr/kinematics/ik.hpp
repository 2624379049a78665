#pragma once

#include "ttvr/kinematics/catheter.hpp"

namespace ttvr::kinematics {

struct AlignmentSolution {
  JointState joints;
  double lateral_error = 0.0;  // mm, tip to the centerline
  double depth = 0.0;          // mm, tip past p1 along the axis
  double angle_error = 0.0;     // deg, tip tangent to the centerline axis
};

/// Planning-DOF configuration placing the tip on the centerline with its
/// tangent along the valve axis, as close to `depth` mm past p1 as the arc
/// allows (depth is weighted softly). Levenberg-Marquardt with
/// a numeric Jacobian from a fixed grid of starts; other DOFs are taken from
/// `base`. Deterministic.
AlignmentSolution solve_alignment(const RigGeometry& rig, const JointLimits& limits,
                                  const anatomy::ValveTarget& target, double depth,
                                  const JointState& base = {});

}  // namespace ttvr::kinematics
