#pragma once

// Synthetic scenes for tests, the acceptance suite and the demo fixtures.

#include "gtex/camera.hpp"
#include "gtex/frames.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/mesh.hpp"
#include "gtex/renderer.hpp"

#include <cstdint>
#include <vector>

namespace gtex::fixtures {

struct RawMesh {
  std::vector<Vec3> positions;
  std::vector<Triangle> triangles;
};

/// Subdivided icosahedron on a sphere; level 2 has 320 faces.
RawMesh icosphere(int subdivisions, double radius = 1.0);

/// Convex hull of `points` (assumed in convex position, e.g. on a sphere),
/// outward-facing. Brute force; meant for a few dozen points.
RawMesh convex_hull(const std::vector<Vec3>& points);

/// Vertex decimation of a sphere mesh: keeps the `keep` vertices closest to a
/// Fibonacci lattice of directions and re-hulls them (2 * keep - 4 faces).
RawMesh decimate_sphere(const RawMesh& mesh, int keep);

/// One UV island per triangle, packed in a square grid; every island is the
/// world triangle scaled by one global factor, so w-scalers are uniform.
ProxyMesh island_atlas(const RawMesh& mesh, double padding = 0.1);

/// (nx x ny)-cell grid over [-size/2, size/2]^2 in the z = height(x, y) surface
/// with a shared UV atlas covering [0,1]^2.
ProxyMesh grid_mesh(int nx, int ny, double size, const std::vector<double>& heights = {});

/// 1-to-4 midpoint split. The new mesh covers the same surface with the same
/// atlas, triangle by triangle.
ProxyMesh subdivide_flat(const ProxyMesh& mesh);

/// Cameras on a Fibonacci sphere around `target`, looking at it.
std::vector<Camera> orbit_cameras(int count, double distance, int size, double fov_x,
                                  const Vec3& target = Vec3::Zero());

/// Opaque, flat, colorful texture: per triangle three Gaussians whose colors
/// follow a smooth pattern of the world position.
GaussianTexture reference_texture(const ProxyMesh& mesh, std::uint64_t seed = 7);

/// Renders `gt` from every camera into a frame set.
FrameSet render_frames(const GaussianTexture& gt, const ProxyMesh& mesh,
                       const std::vector<Camera>& cameras, const Vec3& background,
                       const RenderSettings& settings = {});

}  // namespace gtex::fixtures
