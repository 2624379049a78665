#include "ttvr/anatomy/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace ttvr::anatomy {

namespace {

constexpr double kSvcCap = 10.0;  // tube extends this far behind the port

double capped_cylinder_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
  const Vec3 axis = (b - a).normalized();
  const double half = 0.5 * (b - a).norm();
  const Vec3 c = 0.5 * (a + b);
  const double along = axis.dot(p - c);
  const double radial = (p - c - along * axis).norm();
  const double dx = radial - radius;
  const double dy = std::abs(along) - half;
  const double outside = std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  return std::min(std::max(dx, dy), 0.0) + outside;
}

double sphere_sdf(const Vec3& p, const Vec3& c, double radius) { return (p - c).norm() - radius; }

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
  return (p - a - t * ab).norm();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error("phantom: " + message);
}

}  // namespace

PhantomGeometry::PhantomGeometry(const PhantomSpec& spec) : spec_(spec) {
  const auto& s = spec;
  require(s.svc_radius > 0 && s.svc_length > 0 && s.atrium_radius > 0 && s.ventricle_radius > 0 &&
              s.annulus_radius > 0 && s.annulus_thickness > 0 && s.grid_resolution > 0,
          "all radii and lengths must be positive");
  require(s.annulus_radius < s.atrium_radius, "annulus_radius must be smaller than atrium_radius");
  require(s.annulus_radius < s.ventricle_radius, "annulus_radius must be smaller than ventricle_radius");

  svc_z0_ = -kSvcCap;
  const double center_depth = 0.7 * s.atrium_radius;
  // The tube end sits inside the sphere only if its rim is inside the chord circle.
  require(s.svc_radius < std::sqrt(s.atrium_radius * s.atrium_radius - center_depth * center_depth),
          "disconnected lumen: SVC does not open into the atrium");
  atrium_center_ = Vec3(0, 0, s.svc_length + center_depth);

  const double tilt = deg2rad(s.annulus_offset_angle);
  const double roll = deg2rad(s.annulus_azimuth);
  valve_axis_ = Vec3(std::sin(tilt) * std::cos(roll), std::sin(tilt) * std::sin(roll), std::cos(tilt));
  const double ra2 = s.annulus_radius * s.annulus_radius;
  const double atrial_depth = std::sqrt(s.atrium_radius * s.atrium_radius - ra2);
  const double ventricular_depth = std::sqrt(s.ventricle_radius * s.ventricle_radius - ra2);
  p1_ = atrium_center_ + atrial_depth * valve_axis_;
  p2_ = p1_ + s.annulus_thickness * valve_axis_;
  ventricle_center_ = p2_ + ventricular_depth * valve_axis_;

  require((ventricle_center_ - atrium_center_).norm() >= s.atrium_radius + s.ventricle_radius,
          "self-intersecting lumen: atrium and ventricle overlap around the annulus "
          "(increase annulus_thickness)");
  const double svc_clearance =
      segment_distance(ventricle_center_, Vec3(0, 0, svc_z0_), Vec3(0, 0, s.svc_length));
  require(svc_clearance > s.ventricle_radius + s.svc_radius,
          "self-intersecting lumen: ventricle overlaps the SVC");
}

double PhantomGeometry::signed_distance(const Vec3& p) const {
  const auto& s = spec_;
  const double svc = capped_cylinder_sdf(p, Vec3(0, 0, svc_z0_), Vec3(0, 0, s.svc_length), s.svc_radius);
  const double atrium = sphere_sdf(p, atrium_center_, s.atrium_radius);
  // Neck is extended 1 mm into both chambers so the seams are buried.
  const double neck = capped_cylinder_sdf(p, p1_ - valve_axis_, p2_ + valve_axis_, s.annulus_radius);
  const double ventricle = sphere_sdf(p, ventricle_center_, s.ventricle_radius);
  return std::min({svc, atrium, neck, ventricle});
}

Aabb PhantomGeometry::bounds() const {
  Aabb box;
  const auto& s = spec_;
  box.extend(Vec3(-s.svc_radius, -s.svc_radius, svc_z0_));
  box.extend(Vec3(s.svc_radius, s.svc_radius, s.svc_length));
  box.extend(atrium_center_ - Vec3::Constant(s.atrium_radius));
  box.extend(atrium_center_ + Vec3::Constant(s.atrium_radius));
  box.extend(ventricle_center_ - Vec3::Constant(s.ventricle_radius));
  box.extend(ventricle_center_ + Vec3::Constant(s.ventricle_radius));
  return box;
}

TriMesh mesh_level_set(const std::function<double(const Vec3&)>& field, const Aabb& box, double cell) {
  const Vec3 lo = box.min - Vec3::Constant(2 * cell);
  const Vec3 span = box.extent() + Vec3::Constant(4 * cell);
  const int nx = static_cast<int>(std::ceil(span.x() / cell)) + 1;
  const int ny = static_cast<int>(std::ceil(span.y() / cell)) + 1;
  const int nz = static_cast<int>(std::ceil(span.z() / cell)) + 1;
  auto gid = [&](int i, int j, int k) { return (static_cast<std::int64_t>(k) * ny + j) * nx + i; };
  auto gpos = [&](int i, int j, int k) { return Vec3(lo.x() + i * cell, lo.y() + j * cell, lo.z() + k * cell); };

  // Values are nudged off zero so no surface vertex lands on a grid node.
  const double nudge = 1e-4 * cell;
  std::vector<double> values(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double v = field(gpos(i, j, k));
        if (std::abs(v) < nudge) v = v < 0 ? -nudge : nudge;
        values[gid(i, j, k)] = v;
      }

  TriMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  auto edge_point = [&](std::int64_t a, std::int64_t b, const Vec3& pa, const Vec3& pb) -> int {
    const auto key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint64_t>(std::max(a, b));
    auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (inserted) {
      const double fa = values[a], fb = values[b];
      mesh.vertices.push_back(pa + (fa / (fa - fb)) * (pb - pa));
    }
    return it->second;
  };
  auto emit = [&](int a, int b, int c, const Vec3& outward) {
    const Vec3 n = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
    if (n.dot(outward) >= 0) mesh.triangles.push_back({a, b, c});
    else mesh.triangles.push_back({a, c, b});
  };

  // Kuhn subdivision: one tetrahedron per axis permutation, all sharing the
  // main diagonal 0-7. Corner c has offset (c&1, c>>1&1, c>>2&1).
  static constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
                                      {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        std::int64_t ids[8];
        Vec3 pos[8];
        bool any_in = false, any_out = false;
        for (int c = 0; c < 8; ++c) {
          const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
          ids[c] = gid(i + di, j + dj, k + dk);
          pos[c] = gpos(i + di, j + dj, k + dk);
          (values[ids[c]] < 0 ? any_in : any_out) = true;
        }
        if (!any_in || !any_out) continue;
        for (const auto& tet : kTets) {
          int in[4], out[4], n_in = 0, n_out = 0;
          for (int c : tet) (values[ids[c]] < 0 ? in[n_in++] : out[n_out++]) = c;
          if (n_in == 0 || n_out == 0) continue;
          Vec3 in_c = Vec3::Zero(), out_c = Vec3::Zero();
          for (int q = 0; q < n_in; ++q) in_c += pos[in[q]] / n_in;
          for (int q = 0; q < n_out; ++q) out_c += pos[out[q]] / n_out;
          const Vec3 outward = out_c - in_c;
          auto ep = [&](int a, int b) { return edge_point(ids[a], ids[b], pos[a], pos[b]); };
          if (n_in == 1) {
            emit(ep(in[0], out[0]), ep(in[0], out[1]), ep(in[0], out[2]), outward);
          } else if (n_out == 1) {
            emit(ep(out[0], in[0]), ep(out[0], in[1]), ep(out[0], in[2]), outward);
          } else {
            // Quad cycle: (a,c) (a,d) (b,d) (b,c).
            const int ac = ep(in[0], out[0]), ad = ep(in[0], out[1]);
            const int bd = ep(in[1], out[1]), bc = ep(in[1], out[0]);
            emit(ac, ad, bd, outward);
            emit(ac, bd, bc, outward);
          }
        }
      }
  return mesh;
}

Phantom synthesize_phantom(const PhantomSpec& spec) {
  PhantomGeometry geometry(spec);
  TriMesh mesh = mesh_level_set([&](const Vec3& p) { return geometry.signed_distance(p); }, geometry.bounds(),
                                spec.grid_resolution);
  const MeshInspection info = inspect_mesh(mesh);
  require(info.components == 1, "disconnected lumen: " + std::to_string(info.components) + " surface components");
  HeartModel model(std::move(mesh), -Vec3::UnitZ());
  model = model.with_insertion_port({Vec3::Zero(), Vec3::UnitZ()});
  const ValveTarget target = geometry.valve_target();
  require(model.contains(target.p1) && model.contains(target.p2), "valve centerline leaves the lumen");
  return {std::move(model), target, std::move(geometry)};
}

TriMesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  for (int c = 0; c < 8; ++c)
    m.vertices.emplace_back(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(), c & 4 ? hi.z() : lo.z());
  // Outward-facing, two triangles per face.
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = midpoint.try_emplace(key, static_cast<int>(m.vertices.size()));
      if (inserted) m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      return it->second;
    };
    std::vector<Triangle> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const int a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v = center + radius * v;
  return m;
}

}  // namespace ttvr::anatomy
