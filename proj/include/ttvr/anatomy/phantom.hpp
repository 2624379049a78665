#pragma once

#include "ttvr/anatomy/heart_model.hpp"

#include <functional>

namespace ttvr::anatomy {

/// Parameters of the procedural right-heart phantom. Lengths in mm, angles in deg.
/// The insertion axis is +z with the port at the origin.
struct PhantomSpec {
  double svc_radius = 14.0;
  double svc_length = 150.0;
  double atrium_radius = 50.0;
  double ventricle_radius = 40.0;
  double annulus_radius = 20.0;
  double annulus_thickness = 10.0;
  double annulus_offset_angle = 35.0;  // tilt of the valve axis away from the insertion axis
  double annulus_azimuth = 0.0;        // roll of the tilt plane about the insertion axis
  double grid_resolution = 1.5;        // marching-tetrahedra cell size
};

/// Analytic description of the primitive union: a capped SVC tube opening into
/// the atrial sphere, joined to the ventricular sphere through the annulus neck.
class PhantomGeometry {
 public:
  explicit PhantomGeometry(const PhantomSpec& spec);

  const PhantomSpec& spec() const { return spec_; }
  /// Negative inside. Exact sign; magnitude exact away from primitive seams.
  double signed_distance(const Vec3& p) const;
  bool inside(const Vec3& p) const { return signed_distance(p) < 0.0; }

  ValveTarget valve_target() const { return ValveTarget::from_points(p1_, p2_); }
  Vec3 atrium_center() const { return atrium_center_; }
  Vec3 ventricle_center() const { return ventricle_center_; }
  Aabb bounds() const;

 private:
  PhantomSpec spec_;
  double svc_z0_;
  Vec3 atrium_center_, ventricle_center_, p1_, p2_, valve_axis_;
};

struct Phantom {
  HeartModel model;
  ValveTarget target;
  PhantomGeometry geometry;
};

/// Deterministic. Throws Error when the parameters yield a self-intersecting
/// or disconnected lumen.
Phantom synthesize_phantom(const PhantomSpec& spec);

/// Marching tetrahedra over a regular grid (Kuhn subdivision of each cell).
/// The zero level set of `field` is closed and outward-oriented provided the
/// field is positive on the grid boundary.
TriMesh mesh_level_set(const std::function<double(const Vec3&)>& field, const Aabb& box, double cell);

/// Reference meshes used by tests and examples.
TriMesh make_box_mesh(const Vec3& lo, const Vec3& hi);
TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

}  // namespace ttvr::anatomy
