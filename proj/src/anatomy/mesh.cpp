#include "ttvr/anatomy/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace ttvr::anatomy {

double TriMesh::triangle_area(std::size_t tri) const {
  const Vec3 a = corner(tri, 0);
  return 0.5 * (corner(tri, 1) - a).cross(corner(tri, 2) - a).norm();
}

void TriMesh::scale(double factor) {
  for (auto& v : vertices) v *= factor;
}

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

struct EdgeUse {
  int count = 0;
  int forward = 0;  // traversals from the lower to the higher vertex index
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

MeshInspection inspect_mesh(const TriMesh& mesh, double degenerate_area) {
  MeshInspection out;
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.triangles.size() * 2);

  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (mesh.triangle_area(t) <= degenerate_area) ++out.degenerate_triangles;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      auto& use = edges[edge_key(a, b)];
      ++use.count;
      if (a < b) ++use.forward;
      const int ra = find_root(parent, a);
      const int rb = find_root(parent, b);
      if (ra != rb) parent[ra] = rb;
    }
  }
  for (const auto& [key, use] : edges) {
    if (use.count == 1) {
      ++out.open_edges;
    } else if (use.count > 2) {
      ++out.nonmanifold_edges;
    } else if (use.forward != 1) {
      ++out.misoriented_edges;
    }
  }

  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& tri : mesh.triangles)
    for (int v : tri) used[v] = 1;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (used[v] && find_root(parent, static_cast<int>(v)) == static_cast<int>(v)) ++out.components;
  return out;
}

void validate_closed_mesh(const TriMesh& mesh) {
  if (mesh.triangles.empty()) throw MeshError("empty mesh");
  for (const auto& tri : mesh.triangles)
    for (int v : tri)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
        throw MeshError("triangle references missing vertex " + std::to_string(v));
  const MeshInspection info = inspect_mesh(mesh);
  if (info.degenerate_triangles > 0)
    throw MeshError("degenerate triangles: " + std::to_string(info.degenerate_triangles));
  if (info.open_edges > 0)
    throw MeshError("non-watertight: " + std::to_string(info.open_edges) + " open edges");
  if (info.nonmanifold_edges > 0)
    throw MeshError("non-manifold: " + std::to_string(info.nonmanifold_edges) + " edges shared by more than 2 triangles");
  if (info.misoriented_edges > 0)
    throw MeshError("inconsistent orientation: " + std::to_string(info.misoriented_edges) + " edges");
}

double signed_volume(const TriMesh& mesh) {
  double six_v = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    six_v += mesh.corner(t, 0).dot(mesh.corner(t, 1).cross(mesh.corner(t, 2)));
  return six_v / 6.0;
}

TriMesh weld_triangle_soup(const std::vector<std::array<Vec3, 3>>& soup) {
  TriMesh mesh;
  std::map<std::array<double, 3>, int> index;
  mesh.triangles.reserve(soup.size());
  for (const auto& tri : soup) {
    Triangle ids{};
    for (int k = 0; k < 3; ++k) {
      const std::array<double, 3> key{tri[k].x(), tri[k].y(), tri[k].z()};
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(mesh.vertices.size()));
      if (inserted) mesh.vertices.push_back(tri[k]);
      ids[k] = it->second;
    }
    mesh.triangles.push_back(ids);
  }
  return mesh;
}

namespace {

template <typename T>
T read_le(const std::byte* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    std::reverse(raw, raw + sizeof(T));
  }
  return value;
}

TriMesh parse_stl_binary(std::span<const std::byte> bytes, std::uint32_t count) {
  std::vector<std::array<Vec3, 3>> soup(count);
  const std::byte* p = bytes.data() + 84;
  for (std::uint32_t t = 0; t < count; ++t, p += 50) {
    for (int k = 0; k < 3; ++k) {
      const std::byte* v = p + 12 + 12 * k;
      soup[t][k] = Vec3(read_le<float>(v), read_le<float>(v + 4), read_le<float>(v + 8));
    }
  }
  return weld_triangle_soup(soup);
}

TriMesh parse_stl_ascii(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::array<Vec3, 3>> soup;
  std::array<Vec3, 3> current;
  int corner = 0;
  std::string token;
  while (in >> token) {
    if (token == "vertex") {
      double x, y, z;
      if (!(in >> x >> y >> z)) throw MeshError("STL parse failure: malformed vertex record");
      if (corner >= 3) throw MeshError("STL parse failure: facet with more than 3 vertices");
      current[corner++] = Vec3(x, y, z);
    } else if (token == "endfacet") {
      if (corner != 3) throw MeshError("STL parse failure: facet with " + std::to_string(corner) + " vertices");
      soup.push_back(current);
      corner = 0;
    }
  }
  if (soup.empty()) throw MeshError("STL parse failure: no facets");
  return weld_triangle_soup(soup);
}

}  // namespace

TriMesh parse_stl(std::span<const std::byte> bytes) {
  if (bytes.size() >= 84) {
    const auto count = read_le<std::uint32_t>(bytes.data() + 80);
    if (bytes.size() == 84 + 50ull * count) return parse_stl_binary(bytes, count);
  }
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (text.substr(0, std::min<std::size_t>(text.size(), 64)).find("solid") == std::string_view::npos)
    throw MeshError("STL parse failure: neither binary layout nor ASCII 'solid' header");
  return parse_stl_ascii(text);
}

TriMesh parse_obj(std::string_view text) {
  TriMesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw MeshError("OBJ parse failure at line " + std::to_string(line_no));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> ids;
      std::string ref;
      while (ls >> ref) {
        const int raw = std::stoi(ref.substr(0, ref.find('/')));
        const int id = raw < 0 ? static_cast<int>(mesh.vertices.size()) + raw : raw - 1;
        ids.push_back(id);
      }
      if (ids.size() != 3)
        throw MeshError("OBJ parse failure at line " + std::to_string(line_no) + ": face with " +
                        std::to_string(ids.size()) + " vertices (triangles only)");
      mesh.triangles.push_back({ids[0], ids[1], ids[2]});
    }
  }
  if (mesh.triangles.empty()) throw MeshError("OBJ parse failure: no faces");
  for (const auto& tri : mesh.triangles)
    for (int v : tri)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
        throw MeshError("OBJ parse failure: face references missing vertex");
  return mesh;
}

TriMesh parse_mesh(std::span<const std::byte> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const bool looks_obj = text.substr(0, 5) != "solid" &&
                         (text.starts_with("v ") || text.find("\nv ") != std::string_view::npos) &&
                         text.find("\nf ") != std::string_view::npos;
  return looks_obj ? parse_obj(text) : parse_stl(bytes);
}

std::string write_stl_binary(const TriMesh& mesh, std::string_view header) {
  std::string out(84 + 50 * mesh.triangles.size(), '\0');
  std::memcpy(out.data(), header.data(), std::min<std::size_t>(header.size(), 80));
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  std::memcpy(out.data() + 80, &count, 4);
  char* p = out.data() + 84;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t, p += 50) {
    const Vec3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
    Vec3 n = (b - a).cross(c - a);
    if (n.norm() > 0) n.normalize();
    const Vec3 rows[4] = {n, a, b, c};
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 3; ++k) {
        const auto f = static_cast<float>(rows[r][k]);
        std::memcpy(p + 12 * r + 4 * k, &f, 4);
      }
  }
  return out;
}

std::string write_obj(const TriMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  return out.str();
}

std::span<const std::byte> as_bytes(std::string_view text) {
  return {reinterpret_cast<const std::byte*>(text.data()), text.size()};
}

}  // namespace ttvr::anatomy
