#include "ttvr/anatomy/heart_model.hpp"

#include <algorithm>
#include <cmath>

namespace ttvr::anatomy {

namespace {

// Irrational-ish directions keep rays away from axis-aligned mesh features.
const Vec3 kRayDirections[] = {
    Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259),
    Vec3(-0.2672612419124244, 0.8017837257372732, 0.5345224838248488),
    Vec3(0.8164965809277261, -0.4082482904638631, 0.4082482904638629),
    Vec3(0.1104315261292412, 0.3312945783877236, -0.9370221902484006),
    Vec3(-0.6396021490668313, -0.6396021490668313, 0.4264014327112209),
};

template <typename CastFn>
bool parity_inside(CastFn&& cast) {
  RayParity last;
  for (const Vec3& dir : kRayDirections) {
    last = cast(dir);
    if (!last.ambiguous) break;
  }
  return (last.crossings % 2) == 1;
}

}  // namespace

ValveTarget ValveTarget::from_points(const Vec3& p1, const Vec3& p2) {
  const Vec3 d = p2 - p1;
  if (!(d.norm() > 0.0)) throw Error("valve target points coincide");
  return {p1, p2, d.normalized()};
}

HeartModel::HeartModel(TriMesh mesh, const Vec3& svc_outward) {
  validate_closed_mesh(mesh);
  if (signed_volume(mesh) < 0.0)
    for (auto& tri : mesh.triangles) std::swap(tri[1], tri[2]);
  auto data = std::make_shared<Data>();
  data->bvh = TriangleBvh(mesh);
  data->mesh = std::move(mesh);
  data_ = std::move(data);

  const Vec3 out = svc_outward.normalized();
  const auto& verts = data_->mesh.vertices;
  const auto it = std::max_element(verts.begin(), verts.end(),
                                   [&](const Vec3& a, const Vec3& b) { return a.dot(out) < b.dot(out); });
  port_ = {*it, -out};
}

HeartModel HeartModel::with_insertion_port(const InsertionPort& port) const {
  const ContainmentResult c = query(port.origin);
  if (!c.inside) throw Error("insertion port origin lies outside the lumen");
  if (!(port.axis.norm() > 0.0)) throw Error("insertion port axis is zero");
  HeartModel copy = *this;
  copy.port_ = {port.origin, port.axis.normalized()};
  return copy;
}

ContainmentResult HeartModel::query(const Vec3& p) const {
  const ClosestHit hit = data_->bvh.closest(p);
  if (hit.distance == 0.0) return {true, 0.0};
  const bool inside = parity_inside([&](const Vec3& dir) { return data_->bvh.cast(p, dir); });
  return {inside, inside ? -hit.distance : hit.distance};
}

std::vector<ContainmentResult> HeartModel::containment_query(std::span<const Vec3> points) const {
  std::vector<ContainmentResult> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(query(p));
  return out;
}

bool HeartModel::contains(const Vec3& p) const {
  if (data_->bvh.bounds().squared_distance(p) > 0.0) return false;
  return parity_inside([&](const Vec3& dir) { return data_->bvh.cast(p, dir); });
}

bool HeartModel::point_collides(const Vec3& p, double wall_margin) const {
  // Signed distance > -margin  <=>  outside, or inside with the wall nearer than margin.
  if (!contains(p)) return true;
  return wall_margin > 0.0 && data_->bvh.any_within(p, wall_margin);
}

HeartModel load_heart_model(std::span<const std::byte> mesh_bytes, double unit_scale, const Vec3& svc_outward) {
  if (!(unit_scale > 0.0)) throw MeshError("unit_scale must be positive");
  TriMesh mesh = parse_mesh(mesh_bytes);
  if (unit_scale != 1.0) mesh.scale(unit_scale);
  return HeartModel(std::move(mesh), svc_outward);
}

bool collision(const HeartModel& model, std::span<const Vec3> points, double wall_margin) {
  return std::any_of(points.begin(), points.end(), [&](const Vec3& p) { return model.point_collides(p, wall_margin); });
}

bool collision(const HeartModel& model, const CatheterShape& shape, double wall_margin) {
  return collision(model, std::span<const Vec3>(shape.points.data(), shape.points.size()), wall_margin);
}

ContainmentResult brute_force_query(const TriMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 q = closest_point_on_triangle(p, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    best = std::min(best, (q - p).norm());
  }
  if (best == 0.0) return {true, 0.0};
  // Parity along a single fixed ray, tested against every triangle.
  for (const Vec3& dir : kRayDirections) {
    int crossings = 0;
    bool ambiguous = false;
    for (std::size_t t = 0; t < mesh.triangles.size() && !ambiguous; ++t) {
      const Vec3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
      const Vec3 n = (b - a).cross(c - a);
      const double denom = n.dot(dir);
      if (std::abs(denom) < 1e-12 * n.norm()) continue;
      const double s = n.dot(a - p) / denom;
      if (s < 0.0) continue;
      const Vec3 x = p + s * dir;
      // Barycentric signs via sub-triangle orientation.
      const double w0 = (b - x).cross(c - x).dot(n);
      const double w1 = (c - x).cross(a - x).dot(n);
      const double w2 = (a - x).cross(b - x).dot(n);
      const double tol = 1e-9 * n.squaredNorm();
      if (std::abs(w0) < tol || std::abs(w1) < tol || std::abs(w2) < tol) {
        if (w0 >= -tol && w1 >= -tol && w2 >= -tol) ambiguous = true;
        continue;
      }
      if (w0 > 0 && w1 > 0 && w2 > 0) ++crossings;
    }
    if (ambiguous) continue;
    const bool inside = crossings % 2 == 1;
    return {inside, inside ? -best : best};
  }
  return {false, best};
}

}  // namespace ttvr::anatomy
