#include "ttvr/metrics/metrics.hpp"

#include <ostream>

namespace ttvr::metrics {

double view_error(std::span<const Vec2> real, std::span<const Vec2> ideal) {
  if (real.size() != ideal.size()) throw Error("view_error: point counts differ");
  if (real.empty()) throw Error("view_error: no points");
  double sum = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) sum += (real[i] - ideal[i]).norm();
  return sum / static_cast<double>(real.size());
}

double accumulated_error(std::span<const double> tve, std::span<const double> sve) {
  if (tve.size() != sve.size()) throw Error("accumulated_error: frame counts differ");
  double sum = 0.0;
  for (std::size_t t = 0; t < tve.size(); ++t) sum += tve[t] + sve[t];
  return sum;
}

double projected_trajectory_length(std::span<const Vec2> tips) {
  double sum = 0.0;
  for (std::size_t t = 1; t < tips.size(); ++t) sum += (tips[t] - tips[t - 1]).norm();
  return sum;
}

double tip_trajectory_length(std::span<const JointState> joints, const kinematics::RigGeometry& rig) {
  double sum = 0.0;
  Vec3 prev = Vec3::Zero();
  for (std::size_t t = 0; t < joints.size(); ++t) {
    const Vec3 tip = kinematics::tip_pose(joints[t], rig).position;
    if (t > 0) sum += (tip - prev).norm();
    prev = tip;
  }
  return sum;
}

std::optional<double> motion_efficiency(std::span<const JointState> joints, const kinematics::RigGeometry& rig) {
  const double ttl = tip_trajectory_length(joints, rig);
  if (!(ttl > 0.0)) return std::nullopt;
  const Vec3 a = kinematics::tip_pose(joints.front(), rig).position;
  const Vec3 b = kinematics::tip_pose(joints.back(), rig).position;
  return (b - a).norm() / ttl;
}

std::vector<Vec3> ideal_line(const anatomy::ValveTarget& target, int n, double length) {
  if (n < 2) throw Error("ideal line needs at least 2 points");
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.push_back(target.p2 - target.axis * (length * i / (n - 1)));
  return out;
}

std::vector<Vec3> distal_points(const CatheterShape& shape, int n, double length) {
  if (n < 2) throw Error("distal sampling needs at least 2 points");
  std::vector<Vec3> out;
  // Walk back from the tip along the polyline.
  std::size_t seg = kShapePoints - 1;
  double walked = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = length * i / (n - 1);
    while (seg > 0 && walked + (shape.points[seg] - shape.points[seg - 1]).norm() < s) {
      walked += (shape.points[seg] - shape.points[seg - 1]).norm();
      --seg;
    }
    if (seg == 0) {
      out.push_back(shape.points[0]);
      continue;
    }
    const double len = (shape.points[seg] - shape.points[seg - 1]).norm();
    const double f = len > 0.0 ? (s - walked) / len : 0.0;
    out.push_back(shape.points[seg] + f * (shape.points[seg - 1] - shape.points[seg]));
  }
  return out;
}

namespace {

std::vector<Vec2> project_all(const CameraModel& cam, const std::vector<Vec3>& pts) {
  const ProjectedPolyline p = project(cam, std::span<const Vec3>(pts));
  if (!p.all_visible()) throw Error("points behind camera '" + cam.label + "'");
  return p.points;
}

}  // namespace

RunMetrics compute_run_metrics(std::span<const Frame> frames, const MetricContext& ctx) {
  RunMetrics m;
  m.frames = frames.size();
  if (frames.empty()) return m;
  const auto line = ideal_line(ctx.target, ctx.line_points, ctx.line_length);
  const auto ideal_top = project_all(ctx.top, line);
  const auto ideal_sag = project_all(ctx.sagittal, line);
  std::vector<double> tve, sve;
  std::vector<Vec2> tips_top, tips_sag;
  std::vector<JointState> joints;
  for (const auto& f : frames) {
    const CatheterShape shape = kinematics::forward_kinematics(f.joints, ctx.rig);
    const auto real = distal_points(shape, ctx.line_points, ctx.line_length);
    const auto rt = project_all(ctx.top, real);
    const auto rs = project_all(ctx.sagittal, real);
    tve.push_back(view_error(rt, ideal_top));
    sve.push_back(view_error(rs, ideal_sag));
    tips_top.push_back(rt.front());
    tips_sag.push_back(rs.front());
    joints.push_back(f.joints);
  }
  m.accumulated_error = accumulated_error(tve, sve);
  m.ptl = projected_trajectory_length(tips_top) + projected_trajectory_length(tips_sag);
  m.ttl = tip_trajectory_length(joints, ctx.rig);
  m.me = motion_efficiency(joints, ctx.rig);
  m.total_time = frames.back().t - frames.front().t;
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].intervening) m.intervention_time += frames[i].t - frames[i - 1].t;
  return m;
}

void write_metrics_csv_header(std::ostream& os) {
  os << "run,frames,ae_px,ptl_px,ttl_mm,me,total_time_s,intervention_time_s\n";
}

void write_metrics_csv_row(std::ostream& os, const std::string& run, const RunMetrics& m) {
  const auto old = os.precision(17);
  os << run << ',' << m.frames << ',' << m.accumulated_error << ',' << m.ptl << ',' << m.ttl << ',';
  if (m.me)
    os << *m.me;
  else
    os << "nan";
  os << ',' << m.total_time << ',' << m.intervention_time << '\n';
  os.precision(old);
}

}  // namespace ttvr::metrics
