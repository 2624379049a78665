#pragma once

#include "ttvr/anatomy/mesh.hpp"

#include <limits>
#include <vector>

namespace ttvr::anatomy {

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (min - p).cwiseMax(p - max).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

/// Closest point on triangle (a, b, c) to p. Region-based method from
/// Ericson, "Real-Time Collision Detection", 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestHit {
  int triangle = -1;
  Vec3 point = Vec3::Zero();
  double distance = std::numeric_limits<double>::infinity();
};

/// Ray-mesh crossing count; `ambiguous` is set when the ray grazes an edge or
/// vertex closely enough that parity cannot be trusted.
struct RayParity {
  int crossings = 0;
  bool ambiguous = false;
};

/// Static bounding-volume hierarchy over a triangle mesh. Median split on the
/// longest centroid axis; leaves hold up to kLeafSize triangles.
class TriangleBvh {
 public:
  static constexpr int kLeafSize = 4;

  TriangleBvh() = default;
  explicit TriangleBvh(const TriMesh& mesh);

  /// Nearest surface point; searches only within `max_distance` when given.
  ClosestHit closest(const Vec3& p, double max_distance = std::numeric_limits<double>::infinity()) const;
  /// True when some triangle is strictly closer than `radius`.
  bool any_within(const Vec3& p, double radius) const;
  RayParity cast(const Vec3& origin, const Vec3& direction) const;

  const Aabb& bounds() const { return nodes_.front().box; }

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int first = 0;  // first leaf slot
    int count = 0;  // > 0 for leaves
  };

  int build(int begin, int end, const std::vector<Vec3>& centroids, const std::vector<Aabb>& boxes);

  std::vector<Node> nodes_;
  std::vector<int> order_;                    // triangle ids in leaf order
  std::vector<std::array<Vec3, 3>> corners_;  // indexed by leaf slot
};

}  // namespace ttvr::anatomy
