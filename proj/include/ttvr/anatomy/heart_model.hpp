#pragma once

#include "ttvr/anatomy/bvh.hpp"
#include "ttvr/anatomy/mesh.hpp"
#include "ttvr/core/catheter_shape.hpp"

#include <memory>
#include <span>
#include <vector>

namespace ttvr::anatomy {

/// Entry pose of the catheter into the lumen. `axis` points into the body.
struct InsertionPort {
  Vec3 origin = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
};

struct ContainmentResult {
  bool inside = false;
  double distance = 0.0;  // signed, negative inside
};

/// Two points on the tricuspid centerline, atrial side first.
struct ValveTarget {
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::UnitZ();
  Vec3 axis = Vec3::UnitZ();

  static ValveTarget from_points(const Vec3& p1, const Vec3& p2);

  /// Signed coordinate of `p` along the axis, measured from p1.
  double axial(const Vec3& p) const { return axis.dot(p - p1); }
  /// Perpendicular distance from `p` to the centerline.
  double lateral(const Vec3& p) const { return (p - p1 - axial(p) * axis).norm(); }
};

/// Closed right-heart lumen surface in millimeters. Immutable once built; copies
/// share the acceleration structure.
class HeartModel {
 public:
  /// Validates `mesh` (closed, consistently oriented, no degenerate triangles)
  /// and orients it outward. The port defaults to the vertex farthest along
  /// `svc_outward`, looking back into the body.
  HeartModel(TriMesh mesh, const Vec3& svc_outward = -Vec3::UnitZ());

  const TriMesh& mesh() const { return data_->mesh; }
  const Aabb& bounds() const { return data_->bvh.bounds(); }
  const InsertionPort& insertion_port() const { return port_; }

  /// Returns a copy with an explicit port. The origin must be on or inside the lumen.
  HeartModel with_insertion_port(const InsertionPort& port) const;

  ContainmentResult query(const Vec3& p) const;
  std::vector<ContainmentResult> containment_query(std::span<const Vec3> points) const;
  bool contains(const Vec3& p) const;

  /// True when `p` is outside the lumen or closer than `wall_margin` to the wall.
  bool point_collides(const Vec3& p, double wall_margin) const;

 private:
  struct Data {
    TriMesh mesh;
    TriangleBvh bvh;
  };
  std::shared_ptr<const Data> data_;
  InsertionPort port_;
};

HeartModel load_heart_model(std::span<const std::byte> mesh_bytes, double unit_scale,
                            const Vec3& svc_outward = -Vec3::UnitZ());

/// True iff any shape point is outside the lumen or within `wall_margin` of the wall.
bool collision(const HeartModel& model, std::span<const Vec3> points, double wall_margin);
bool collision(const HeartModel& model, const CatheterShape& shape, double wall_margin);

/// Exhaustive reference implementations used to audit the BVH paths.
ContainmentResult brute_force_query(const TriMesh& mesh, const Vec3& p);

}  // namespace ttvr::anatomy
