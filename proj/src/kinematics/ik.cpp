#include "ttvr/kinematics/ik.hpp"

#include <Eigen/Dense>

namespace ttvr::kinematics {

namespace {

// Angular residual weight: mm of position error per radian of misalignment.
constexpr double kAngleWeight = 100.0;
// Depth along the centerline is a soft preference; lateral error dominates.
constexpr double kDepthWeight = 0.05;

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 residual(const JointState& j, const RigGeometry& rig, const Vec3& goal, const Vec3& axis) {
  const TipPose tip = tip_pose(j, rig);
  Vec6 r;
  const Vec3 d = tip.position - goal;
  const Vec3 along = axis.dot(d) * axis;
  r.head<3>() = (d - along) + kDepthWeight * along;
  r.tail<3>() = kAngleWeight * (tip.axis - axis);
  return r;
}

JointState with_planning(JointState j, const Vec3& q) {
  j.translation = q[0];
  j.rotation = q[1];
  j.bending = q[2];
  return j;
}

Vec3 clamp_planning(const Vec3& q, const JointLimits& limits) {
  return {limits[Dof::translation].clamp(q[0]), limits[Dof::rotation].clamp(q[1]), limits[Dof::bending].clamp(q[2])};
}

}  // namespace

AlignmentSolution solve_alignment(const RigGeometry& rig, const JointLimits& limits,
                                  const anatomy::ValveTarget& target, double depth, const JointState& base) {
  const Vec3 goal = target.p1 + depth * target.axis;
  double best_cost = std::numeric_limits<double>::infinity();
  Vec3 best_q = Vec3::Zero();
  for (double rot = -180.0; rot < 180.0; rot += 45.0)
    for (double bend = 15.0; bend < limits[Dof::bending].max; bend += 30.0) {
      Vec3 q = clamp_planning({limits[Dof::translation].min + 0.5 * limits[Dof::translation].width(), rot, bend}, limits);
      double lambda = 1e-2;
      Vec6 r = residual(with_planning(base, q), rig, goal, target.axis);
      double cost = r.squaredNorm();
      for (int iter = 0; iter < 200 && cost > 1e-20; ++iter) {
        Eigen::Matrix<double, 6, 3> jac;
        for (int k = 0; k < 3; ++k) {
          Vec3 qh = q;
          const double h = 1e-6 * std::max(1.0, std::abs(q[k]));
          qh[k] += h;
          jac.col(k) = (residual(with_planning(base, qh), rig, goal, target.axis) - r) / h;
        }
        const Mat3 jtj = jac.transpose() * jac;
        const Vec3 g = jac.transpose() * r;
        Mat3 damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-9);
        const Vec3 cand = clamp_planning(q - damped.ldlt().solve(g), limits);
        const Vec6 rc = residual(with_planning(base, cand), rig, goal, target.axis);
        if (rc.squaredNorm() < cost) {
          q = cand;
          r = rc;
          if (cost - rc.squaredNorm() < 1e-15 * (1.0 + cost)) {
            cost = rc.squaredNorm();
            break;
          }
          cost = rc.squaredNorm();
          lambda = std::max(lambda * 0.3, 1e-12);
        } else {
          lambda *= 10.0;
          if (lambda > 1e12) break;
        }
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_q = q;
      }
    }
  AlignmentSolution out;
  out.joints = with_planning(base, best_q);
  const TipPose tip = tip_pose(out.joints, rig);
  out.lateral_error = target.lateral(tip.position);
  out.depth = target.axial(tip.position);
  out.angle_error = rad2deg(std::acos(std::clamp(tip.axis.dot(target.axis), -1.0, 1.0)));
  return out;
}

}  // namespace ttvr::kinematics
