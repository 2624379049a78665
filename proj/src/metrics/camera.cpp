#include "ttvr/metrics/camera.hpp"

namespace ttvr::metrics {

CameraModel CameraModel::look_at(std::string label, const Vec3& position, const Vec3& target, const Vec3& up,
                                 double focal, int width, int height) {
  const Vec3 z = (target - position).normalized();
  const Vec3 x = z.cross(up).normalized();
  if (!x.allFinite()) throw Error("camera up vector is parallel to the view direction");
  const Vec3 y = z.cross(x);
  CameraModel c;
  c.label = std::move(label);
  c.position = position;
  c.world_to_camera.row(0) = x.transpose();
  c.world_to_camera.row(1) = y.transpose();
  c.world_to_camera.row(2) = z.transpose();
  c.focal = focal;
  c.width = width;
  c.height = height;
  c.principal_point = {0.5 * width, 0.5 * height};
  return c;
}

void CameraModel::validate() const {
  if (!(focal > 0.0)) throw ConfigError("camera." + label + ".focal", "must be > 0");
  if (width < 1 || height < 1) throw ConfigError("camera." + label + ".resolution", "must be positive");
  if ((world_to_camera * world_to_camera.transpose() - Mat3::Identity()).norm() > 1e-9)
    throw ConfigError("camera." + label + ".orientation", "must be a rotation");
}

std::optional<Vec2> CameraModel::project(const Vec3& p) const {
  const Vec3 c = world_to_camera * (p - position);
  if (!(c.z() > 0.0)) return std::nullopt;
  return Vec2(focal * c.x() / c.z() + principal_point.x(), focal * c.y() / c.z() + principal_point.y());
}

nlohmann::json CameraModel::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({world_to_camera(r, 0), world_to_camera(r, 1), world_to_camera(r, 2)});
  return {{"label", label},
          {"position", {position.x(), position.y(), position.z()}},
          {"world_to_camera", rows},
          {"focal", focal},
          {"principal_point", {principal_point.x(), principal_point.y()}},
          {"resolution", {width, height}}};
}

CameraModel CameraModel::from_json(const nlohmann::json& doc) {
  CameraModel c;
  c.label = doc.at("label").get<std::string>();
  const auto p = doc.at("position").get<std::array<double, 3>>();
  c.position = {p[0], p[1], p[2]};
  const auto r = doc.at("world_to_camera").get<std::array<std::array<double, 3>, 3>>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c.world_to_camera(i, j) = r[i][j];
  c.focal = doc.at("focal").get<double>();
  const auto pp = doc.at("principal_point").get<std::array<double, 2>>();
  c.principal_point = {pp[0], pp[1]};
  const auto res = doc.at("resolution").get<std::array<int, 2>>();
  c.width = res[0];
  c.height = res[1];
  c.validate();
  return c;
}

bool ProjectedPolyline::all_visible() const {
  return std::all_of(visible.begin(), visible.end(), [](bool v) { return v; });
}

ProjectedPolyline project(const CameraModel& camera, std::span<const Vec3> points) {
  ProjectedPolyline out;
  for (const auto& p : points) {
    const auto px = camera.project(p);
    out.visible.push_back(px.has_value());
    if (px) out.points.push_back(*px);
  }
  if (out.points.empty()) throw Error("shape is entirely behind camera '" + camera.label + "'");
  if (out.visible.back()) out.tip = out.points.back();
  return out;
}

ProjectedPolyline project(const CameraModel& camera, const CatheterShape& shape) {
  return project(camera, std::span<const Vec3>(shape.points.data(), shape.points.size()));
}

std::vector<CameraModel> default_cameras(const anatomy::Aabb& box) {
  const Vec3 center = box.center();
  const Vec3 half = 0.5 * box.extent();
  // Image half-extent available at 90% fill, in px, for the limiting axis.
  auto make = [&](std::string label, const Vec3& dir, const Vec3& up, double half_w, double half_h, double depth) {
    const double distance = 3.0 * std::max({half_w, half_h, depth});
    const double near = distance - depth;
    const double focal = 0.9 * std::min(320.0 * near / half_w, 240.0 * near / half_h);
    return CameraModel::look_at(std::move(label), center + distance * dir, center, up, focal);
  };
  // Top: looks along -y; image x is world x, image up is world +z.
  // Sagittal: looks along -x; image up is world +z.
  return {make("top", Vec3::UnitY(), Vec3::UnitZ(), half.x(), half.z(), half.y()),
          make("sagittal", Vec3::UnitX(), Vec3::UnitZ(), half.y(), half.z(), half.x())};
}

}  // namespace ttvr::metrics
