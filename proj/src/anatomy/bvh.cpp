#include "ttvr/anatomy/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ttvr::anatomy {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleBvh::TriangleBvh(const TriMesh& mesh) {
  const auto n = static_cast<int>(mesh.triangles.size());
  if (n == 0) throw MeshError("cannot build BVH over an empty mesh");
  std::vector<Vec3> centroids(n);
  std::vector<Aabb> boxes(n);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < 3; ++k) boxes[t].extend(mesh.corner(t, k));
    centroids[t] = (mesh.corner(t, 0) + mesh.corner(t, 1) + mesh.corner(t, 2)) / 3.0;
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * n / kLeafSize + 1);
  build(0, n, centroids, boxes);
  corners_.resize(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) corners_[i][k] = mesh.corner(order_[i], k);
}

int TriangleBvh::build(int begin, int end, const std::vector<Vec3>& centroids, const std::vector<Aabb>& boxes) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, centroid_box;
  for (int i = begin; i < end; ++i) {
    box.extend(boxes[order_[i]]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  int axis = 0;
  centroid_box.extent().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
    return a < b;
  });
  const int left = build(begin, mid, centroids, boxes);
  const int right = build(mid, end, centroids, boxes);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

ClosestHit TriangleBvh::closest(const Vec3& p, double max_distance) const {
  ClosestHit best;
  double best_sq = std::isinf(max_distance) ? max_distance : max_distance * max_distance;
  int best_slot = -1;

  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squared_distance(p) > best_sq) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& tri = corners_[i];
        const Vec3 q = closest_point_on_triangle(p, tri[0], tri[1], tri[2]);
        const double d = (q - p).squaredNorm();
        if (d < best_sq || (d == best_sq && best_slot >= 0 && order_[i] < order_[best_slot]) ||
            (d == best_sq && best_slot < 0)) {
          best_sq = d;
          best_slot = i;
          best.point = q;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squared_distance(p);
    const double dr = nodes_[node.right].box.squared_distance(p);
    // Nearer child is popped first.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  if (best_slot >= 0) {
    best.triangle = order_[best_slot];
    best.distance = std::sqrt(best_sq);
  }
  return best;
}

bool TriangleBvh::any_within(const Vec3& p, double radius) const {
  const double r_sq = radius * radius;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squared_distance(p) >= r_sq) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& tri = corners_[i];
        if ((closest_point_on_triangle(p, tri[0], tri[1], tri[2]) - p).squaredNorm() < r_sq) return true;
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return false;
}

namespace {

bool ray_hits_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir) {
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double t1 = (box.min[k] - origin[k]) * inv_dir[k];
    double t2 = (box.max[k] - origin[k]) * inv_dir[k];
    if (t1 > t2) std::swap(t1, t2);
    t_min = std::max(t_min, t1);
    t_max = std::min(t_max, t2);
    if (t_min > t_max) return false;
  }
  return true;
}

}  // namespace

RayParity TriangleBvh::cast(const Vec3& origin, const Vec3& direction) const {
  constexpr double kGraze = 1e-9;
  RayParity out;
  const Vec3 inv_dir = direction.cwiseInverse();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_hits_box(node.box, origin, inv_dir)) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        // Moller-Trumbore.
        const auto& tri = corners_[i];
        const Vec3 e1 = tri[1] - tri[0];
        const Vec3 e2 = tri[2] - tri[0];
        const Vec3 pvec = direction.cross(e2);
        const double det = e1.dot(pvec);
        const double scale = e1.norm() * e2.norm();
        if (std::abs(det) <= kGraze * scale) {
          // Ray parallel to the triangle plane; only matters if it lies in it.
          const Vec3 n = e1.cross(e2);
          if (std::abs(n.normalized().dot(origin - tri[0])) <= kGraze) out.ambiguous = true;
          continue;
        }
        const double inv_det = 1.0 / det;
        const Vec3 tvec = origin - tri[0];
        const double u = tvec.dot(pvec) * inv_det;
        if (u < -kGraze || u > 1.0 + kGraze) continue;
        const Vec3 qvec = tvec.cross(e1);
        const double v = direction.dot(qvec) * inv_det;
        if (v < -kGraze || u + v > 1.0 + kGraze) continue;
        const double t = e2.dot(qvec) * inv_det;
        if (t < -kGraze) continue;
        if (u < kGraze || v < kGraze || u + v > 1.0 - kGraze || t < kGraze) {
          out.ambiguous = true;
          continue;
        }
        ++out.crossings;
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return out;
}

}  // namespace ttvr::anatomy
