#pragma once

#include "gtex/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gtex {

using Triangle = std::array<std::uint32_t, 3>;
using TriangleUv = std::array<Vec2, 3>;

/// UV-mapped proxy mesh carrying the per-triangle and per-vertex w-scalers.
///
/// Treated as immutable once built: every operation below returns a new mesh.
struct ProxyMesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<Triangle> triangles;
  std::vector<TriangleUv> uvs;  // three corners per triangle
  std::vector<double> omega_tri;
  std::vector<double> omega_vert;
  std::vector<std::vector<std::uint32_t>> vertex_tri_adjacency;

  std::size_t vertex_count() const noexcept { return positions.size(); }
  std::size_t triangle_count() const noexcept { return triangles.size(); }
};

/// Builds a complete mesh (adjacency, normals, w-scalers) from raw geometry.
/// Empty `normals` means "compute them".
ProxyMesh make_proxy_mesh(std::vector<Vec3> positions, std::vector<Triangle> triangles,
                          std::vector<TriangleUv> uvs, std::vector<Vec3> normals = {});

ProxyMesh load_proxy_mesh(const std::filesystem::path& path);
ProxyMesh parse_obj(std::istream& in);

/// Writes positions, per-corner UVs and vertex normals as OBJ (v/vt/vn faces).
void write_obj(const ProxyMesh& mesh, const std::filesystem::path& path);

ProxyMesh compute_vertex_normals(ProxyMesh mesh);
ProxyMesh compute_w_scalers(ProxyMesh mesh);

/// Throws Error when any documented ProxyMesh invariant is broken.
void validate(const ProxyMesh& mesh);

double mean_uv_edge_length(const ProxyMesh& mesh, std::size_t tri);

struct UvHit {
  std::uint32_t tri_id;
  Vec3 phi;
};

/// Uniform-grid point location over the UV atlas in [0,1]^2.
class UvLocator {
 public:
  explicit UvLocator(const ProxyMesh& mesh);

  /// Lowest-id triangle whose UV footprint contains `uv` (barycentric >= -1e-9).
  std::optional<UvHit> locate(const Vec2& uv) const;

 private:
  const ProxyMesh* mesh_;
  int resolution_;
  std::vector<std::vector<std::uint32_t>> cells_;
};

std::optional<UvHit> locate_uv(const ProxyMesh& mesh, const Vec2& uv);

/// FNV-1a over topology, rest positions and UVs.
std::uint64_t mesh_fingerprint(const ProxyMesh& mesh);

/// Human-readable summary: counts and w-scaler statistics.
std::string mesh_report(const ProxyMesh& mesh);

}  // namespace gtex
