#pragma once

#include "ttvr/anatomy/bvh.hpp"
#include "ttvr/core/catheter_shape.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ttvr::metrics {

/// Pinhole camera. Camera frame: +z along the optical axis, +x right, +y down.
struct CameraModel {
  std::string label;
  Vec3 position = Vec3::Zero();
  Mat3 world_to_camera = Mat3::Identity();  // rows are the camera axes in world coordinates
  double focal = 500.0;                     // px
  Vec2 principal_point{320.0, 240.0};       // px
  int width = 640;
  int height = 480;

  /// Camera at `position` looking at `target`; `up` fixes the roll (image -y).
  static CameraModel look_at(std::string label, const Vec3& position, const Vec3& target, const Vec3& up,
                             double focal, int width = 640, int height = 480);
  void validate() const;

  /// Sub-pixel projection; nullopt for points at or behind the camera plane.
  std::optional<Vec2> project(const Vec3& p) const;

  nlohmann::json to_json() const;
  static CameraModel from_json(const nlohmann::json& doc);
};

struct ProjectedPolyline {
  std::vector<Vec2> points;    // visible points only, in input order
  std::vector<bool> visible;   // per input point
  std::optional<Vec2> tip;     // last input point
  bool all_visible() const;
};

/// Throws Error when every point is behind the camera.
ProjectedPolyline project(const CameraModel& camera, std::span<const Vec3> points);
ProjectedPolyline project(const CameraModel& camera, const CatheterShape& shape);

/// Top and sagittal views of `box`: along -y and -x respectively, far enough
/// that the box fills at most 90% of a 640x480 frame.
std::vector<CameraModel> default_cameras(const anatomy::Aabb& box);

}  // namespace ttvr::metrics
