#pragma once

#include "ttvr/anatomy/heart_model.hpp"
#include "ttvr/core/catheter_shape.hpp"
#include "ttvr/kinematics/joints.hpp"

#include <array>

namespace ttvr::kinematics {

/// Mounting of the catheter relative to the anatomy.
///
/// The flexible segment starts `passive_length + translation` mm past the port
/// along the insertion axis. Its exposed length is
///   active_length - sheath_gain * sheath + core_gain * core,
/// floored at `min_exposed_length`.
struct RigGeometry {
  anatomy::InsertionPort port;
  double passive_length = 10.0;
  double active_length = 120.0;
  double sheath_gain = 1.0;
  double core_gain = 1.0;
  double min_exposed_length = 10.0;

  double exposed_length(const JointState& j) const;
  /// Orthonormal frame at the port: columns (bend reference x, y, insertion axis).
  Mat3 port_frame() const;
};

/// Constant-curvature arc of arc length `active_length` turning through
/// `bending` degrees in the local x-z plane, sampled at 100 equal arc-length
/// stations from the base (origin, tangent +z) to the tip.
CatheterShape bend_shape(double bending_deg, double active_length);

/// World-frame shape: base advanced along the insertion axis by translation,
/// bend plane rolled by rotation. Jaw roll does not move the shape.
CatheterShape forward_kinematics(const JointState& j, const RigGeometry& rig);

TipPose tip_pose(const JointState& j, const RigGeometry& rig);

/// Upper bounds on |d tip / d q| per DOF (mm per unit of that DOF), valid for
/// every configuration of `rig` with exposed length at most `max_exposed`.
std::array<double, kDofCount> tip_lipschitz_bounds(const RigGeometry& rig, double max_exposed);

/// Resamples a polyline to 100 stations equally spaced along its own length.
std::array<Vec3, kShapePoints> resample_equal_arc(const std::array<Vec3, kShapePoints>& points);

}  // namespace ttvr::kinematics
