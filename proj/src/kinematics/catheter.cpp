#include "ttvr/kinematics/catheter.hpp"

#include <algorithm>
#include <cmath>

namespace ttvr::kinematics {

double RigGeometry::exposed_length(const JointState& j) const {
  return std::max(min_exposed_length, active_length - sheath_gain * j.sheath + core_gain * j.core);
}

Mat3 RigGeometry::port_frame() const {
  const Vec3 z = port.axis.normalized();
  Vec3 ref = Vec3::UnitX();
  if (std::abs(ref.dot(z)) > 0.9) ref = Vec3::UnitY();
  const Vec3 x = (ref - ref.dot(z) * z).normalized();
  Mat3 frame;
  frame.col(0) = x;
  frame.col(1) = z.cross(x);
  frame.col(2) = z;
  return frame;
}

CatheterShape bend_shape(double bending_deg, double active_length) {
  CatheterShape shape;
  const double theta = deg2rad(bending_deg);
  const double n = static_cast<double>(kShapePoints - 1);
  if (theta == 0.0) {
    for (std::size_t i = 0; i < kShapePoints; ++i) shape.points[i] = Vec3(0, 0, active_length * i / n);
  } else {
    const double kappa = theta / active_length;
    for (std::size_t i = 0; i < kShapePoints; ++i) {
      const double u = theta * i / n;  // turning angle at this station
      const double half = std::sin(0.5 * u);
      // 1 - cos u written as 2 sin^2(u/2) to stay accurate for small u.
      shape.points[i] = Vec3(2.0 * half * half / kappa, 0.0, std::sin(u) / kappa);
    }
  }
  const double c = std::cos(theta), s = std::sin(theta);
  shape.tip_frame.position = shape.points.back();
  shape.tip_frame.rotation << c, 0, s,  //
      0, 1, 0,                          //
      -s, 0, c;
  return shape;
}

CatheterShape forward_kinematics(const JointState& j, const RigGeometry& rig) {
  CatheterShape local = bend_shape(j.bending, rig.exposed_length(j));
  const Mat3 port = rig.port_frame();
  const Mat3 rolled = port * Eigen::AngleAxisd(deg2rad(j.rotation), Vec3::UnitZ()).toRotationMatrix();
  const Vec3 base = rig.port.origin + (rig.passive_length + j.translation) * port.col(2);
  CatheterShape world;
  for (std::size_t i = 0; i < kShapePoints; ++i) world.points[i] = base + rolled * local.points[i];
  world.tip_frame.position = world.points.back();
  world.tip_frame.rotation = rolled * local.tip_frame.rotation;
  return world;
}

TipPose tip_pose(const JointState& j, const RigGeometry& rig) { return forward_kinematics(j, rig).tip_pose(); }

std::array<double, kDofCount> tip_lipschitz_bounds(const RigGeometry& rig, double max_exposed) {
  const double per_deg = kPi / 180.0;
  std::array<double, kDofCount> out{};
  out[static_cast<int>(Dof::translation)] = 1.0;
  // Roll moves the tip on a circle whose radius is the lateral offset (< exposed length).
  out[static_cast<int>(Dof::rotation)] = max_exposed * per_deg;
  // |d tip / d theta| of a constant-curvature arc peaks at L/2 for theta -> 0.
  out[static_cast<int>(Dof::bending)] = 0.5 * max_exposed * per_deg;
  // d tip / dL = ((1 - cos t)/t, sin t / t) has norm <= 1.
  out[static_cast<int>(Dof::sheath)] = rig.sheath_gain;
  out[static_cast<int>(Dof::core)] = rig.core_gain;
  out[static_cast<int>(Dof::jaw)] = 0.0;
  return out;
}

std::array<Vec3, kShapePoints> resample_equal_arc(const std::array<Vec3, kShapePoints>& points) {
  std::array<double, kShapePoints> cumulative{};
  for (std::size_t i = 1; i < kShapePoints; ++i)
    cumulative[i] = cumulative[i - 1] + (points[i] - points[i - 1]).norm();
  const double total = cumulative.back();
  std::array<Vec3, kShapePoints> out;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < kShapePoints; ++i) {
    const double target = total * i / static_cast<double>(kShapePoints - 1);
    while (seg + 2 < kShapePoints && cumulative[seg + 1] < target) ++seg;
    const double len = cumulative[seg + 1] - cumulative[seg];
    const double t = len > 0.0 ? std::clamp((target - cumulative[seg]) / len, 0.0, 1.0) : 0.0;
    out[i] = points[seg] + t * (points[seg + 1] - points[seg]);
  }
  return out;
}

}  // namespace ttvr::kinematics
