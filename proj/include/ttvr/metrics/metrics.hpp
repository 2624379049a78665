#pragma once

#include "ttvr/kinematics/catheter.hpp"
#include "ttvr/metrics/camera.hpp"

#include <iosfwd>
#include <optional>

namespace ttvr::metrics {

using kinematics::JointState;

/// Mean pixel distance between corresponding points. Throws on size mismatch.
double view_error(std::span<const Vec2> real, std::span<const Vec2> ideal);
/// Sum over frames of top plus sagittal view error.
double accumulated_error(std::span<const double> tve, std::span<const double> sve);
/// Pixel path length of the projected tip.
double projected_trajectory_length(std::span<const Vec2> tips);
/// Path length of the forward-kinematics tip through the joint series, mm.
double tip_trajectory_length(std::span<const JointState> joints, const kinematics::RigGeometry& rig);
/// Straight-line tip displacement over TTL; nullopt when TTL is zero.
std::optional<double> motion_efficiency(std::span<const JointState> joints, const kinematics::RigGeometry& rig);

/// Surgeon-calibrated stand-in: n points on the valve axis from p2 back
/// `length` mm towards the atrium, tip end first.
std::vector<Vec3> ideal_line(const anatomy::ValveTarget& target, int n = 20, double length = 40.0);
/// Distal `length` mm of the catheter resampled to n points, tip end first.
std::vector<Vec3> distal_points(const CatheterShape& shape, int n = 20, double length = 40.0);

struct Frame {
  double t = 0.0;
  JointState joints;
  bool intervening = false;
};

struct RunMetrics {
  double accumulated_error = 0.0;  // px
  double ptl = 0.0;                // px, top plus sagittal
  double ttl = 0.0;                // mm
  std::optional<double> me;
  double total_time = 0.0;         // s
  double intervention_time = 0.0;  // s
  std::size_t frames = 0;
};

struct MetricContext {
  kinematics::RigGeometry rig;
  anatomy::ValveTarget target;
  CameraModel top, sagittal;
  int line_points = 20;
  double line_length = 40.0;
};

/// All metrics of one recorded run. Time accounting: total = last t - first t,
/// intervention = sum of frame intervals that end in an intervening frame.
RunMetrics compute_run_metrics(std::span<const Frame> frames, const MetricContext& ctx);

void write_metrics_csv_header(std::ostream& os);
void write_metrics_csv_row(std::ostream& os, const std::string& run, const RunMetrics& m);

}  // namespace ttvr::metrics
