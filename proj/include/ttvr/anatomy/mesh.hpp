#pragma once

#include "ttvr/core/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttvr::anatomy {

using Triangle = std::array<int, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }
  double triangle_area(std::size_t tri) const;
  void scale(double factor);
};

/// Topological summary used to decide whether a mesh can serve as a closed lumen.
struct MeshInspection {
  std::size_t open_edges = 0;          // undirected edges used by one triangle
  std::size_t nonmanifold_edges = 0;   // undirected edges used by three or more
  std::size_t misoriented_edges = 0;   // manifold edges traversed twice in the same direction
  std::size_t degenerate_triangles = 0;
  std::size_t components = 0;

  bool closed_and_oriented() const {
    return open_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0;
  }
};

MeshInspection inspect_mesh(const TriMesh& mesh, double degenerate_area = 1e-12);

/// Throws MeshError describing the first failing check.
void validate_closed_mesh(const TriMesh& mesh);

/// Signed volume via the divergence theorem; positive for outward-facing normals.
double signed_volume(const TriMesh& mesh);

/// Merges bit-identical vertex coordinates (STL stores a soup of triangles).
TriMesh weld_triangle_soup(const std::vector<std::array<Vec3, 3>>& soup);

TriMesh parse_stl(std::span<const std::byte> bytes);
TriMesh parse_obj(std::string_view text);
/// Sniffs the format: OBJ when it contains `v`/`f` records, STL otherwise.
TriMesh parse_mesh(std::span<const std::byte> bytes);

std::string write_stl_binary(const TriMesh& mesh, std::string_view header = "ttvr");
std::string write_obj(const TriMesh& mesh);

std::span<const std::byte> as_bytes(std::string_view text);

}  // namespace ttvr::anatomy
