#include "gtex/fixtures.hpp"

#include "gtex/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

namespace gtex::fixtures {

namespace {

std::vector<Vec3> fibonacci_directions(int count) {
  std::vector<Vec3> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * i;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

}  // namespace

RawMesh icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  RawMesh m;
  m.positions = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                 {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : m.positions) p.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      auto id = static_cast<std::uint32_t>(m.positions.size());
      m.positions.push_back((m.positions[a] + m.positions[b]).normalized());
      mid.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    for (const auto& tri : m.triangles) {
      auto ab = midpoint(tri[0], tri[1]);
      auto bc = midpoint(tri[1], tri[2]);
      auto ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& p : m.positions) p *= radius;
  return m;
}

RawMesh convex_hull(const std::vector<Vec3>& points) {
  RawMesh m;
  m.positions = points;
  const auto n = static_cast<std::uint32_t>(points.size());
  if (n < 4) throw Error("convex hull needs at least 4 points");
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, p.norm());
  const double tol = 1e-9 * std::max(scale * scale * scale, 1e-300);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      for (std::uint32_t k = j + 1; k < n; ++k) {
        Vec3 normal = (points[j] - points[i]).cross(points[k] - points[i]);
        bool above = false, below = false;
        for (std::uint32_t q = 0; q < n && !(above && below); ++q) {
          if (q == i || q == j || q == k) continue;
          double s = normal.dot(points[q] - points[i]);
          if (s > tol) above = true;
          if (s < -tol) below = true;
        }
        if (above && below) continue;
        if (above) {
          m.triangles.push_back({i, k, j});
        } else {
          m.triangles.push_back({i, j, k});
        }
      }
    }
  }
  if (m.triangles.size() != 2 * static_cast<std::size_t>(n) - 4) {
    throw Error("points are not in general convex position");
  }
  return m;
}

RawMesh decimate_sphere(const RawMesh& mesh, int keep) {
  if (keep < 4 || static_cast<std::size_t>(keep) > mesh.positions.size()) {
    throw Error("bad decimation target");
  }
  std::vector<bool> used(mesh.positions.size(), false);
  std::vector<Vec3> kept;
  for (const auto& d : fibonacci_directions(keep)) {
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
      if (used[v]) continue;
      double s = mesh.positions[v].normalized().dot(d);
      if (s > best_dot) {
        best_dot = s;
        best = v;
      }
    }
    used[best] = true;
    kept.push_back(mesh.positions[best]);
  }
  return convex_hull(kept);
}

ProxyMesh island_atlas(const RawMesh& mesh, double padding) {
  const std::size_t count = mesh.triangles.size();
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  const double cell = 1.0 / grid;
  std::vector<std::array<Vec2, 3>> local(count);
  double extent = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.positions[tri[0]];
    const Vec3& b = mesh.positions[tri[1]];
    const Vec3& c = mesh.positions[tri[2]];
    Vec3 e1 = (b - a).normalized();
    Vec3 n = (b - a).cross(c - a);
    Vec3 e2 = n.cross(e1).normalized();
    local[t] = {Vec2(0, 0), Vec2((b - a).dot(e1), 0), Vec2((c - a).dot(e1), (c - a).dot(e2))};
    double min_x = std::min({0.0, local[t][2].x()});
    for (auto& p : local[t]) p.x() -= min_x;
    double w = std::max(local[t][1].x(), local[t][2].x());
    extent = std::max({extent, w, local[t][2].y()});
  }
  const double scale = (1.0 - 2.0 * padding) * cell / extent;
  std::vector<TriangleUv> uvs(count);
  for (std::size_t t = 0; t < count; ++t) {
    Vec2 origin((t % grid + padding) * cell, (t / grid + padding) * cell);
    for (int k = 0; k < 3; ++k) uvs[t][k] = origin + scale * local[t][k];
  }
  return make_proxy_mesh(mesh.positions, mesh.triangles, std::move(uvs));
}

ProxyMesh grid_mesh(int nx, int ny, double size, const std::vector<double>& heights) {
  if (nx < 1 || ny < 1) throw Error("grid needs at least one cell per axis");
  const auto stride = static_cast<std::uint32_t>(nx + 1);
  if (!heights.empty() && heights.size() != static_cast<std::size_t>(nx + 1) * (ny + 1)) {
    throw Error("grid heights do not match the vertex count");
  }
  std::vector<Vec3> positions;
  std::vector<Vec2> uv;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      double h = heights.empty() ? 0.0 : heights[static_cast<std::size_t>(j) * stride + i];
      positions.emplace_back(size * (double(i) / nx - 0.5), size * (double(j) / ny - 0.5), h);
      uv.emplace_back(double(i) / nx, double(j) / ny);
    }
  }
  std::vector<Triangle> triangles;
  std::vector<TriangleUv> uvs;
  for (std::uint32_t j = 0; j < static_cast<std::uint32_t>(ny); ++j) {
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(nx); ++i) {
      std::uint32_t a = j * stride + i, b = a + 1, c = a + stride, d = c + 1;
      for (Triangle t : {Triangle{a, b, d}, Triangle{a, d, c}}) {
        triangles.push_back(t);
        uvs.push_back({uv[t[0]], uv[t[1]], uv[t[2]]});
      }
    }
  }
  return make_proxy_mesh(std::move(positions), std::move(triangles), std::move(uvs));
}

ProxyMesh subdivide_flat(const ProxyMesh& mesh) {
  std::vector<Vec3> positions = mesh.positions;
  std::vector<Vec3> normals = mesh.normals;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    auto id = static_cast<std::uint32_t>(positions.size());
    positions.push_back(0.5 * (positions[a] + positions[b]));
    normals.push_back((normals[a] + normals[b]).normalized());
    mid.emplace(key, id);
    return id;
  };
  std::vector<Triangle> triangles;
  std::vector<TriangleUv> uvs;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& uv = mesh.uvs[t];
    auto ab = midpoint(tri[0], tri[1]);
    auto bc = midpoint(tri[1], tri[2]);
    auto ca = midpoint(tri[2], tri[0]);
    Vec2 uab = 0.5 * (uv[0] + uv[1]), ubc = 0.5 * (uv[1] + uv[2]), uca = 0.5 * (uv[2] + uv[0]);
    triangles.push_back({tri[0], ab, ca});
    uvs.push_back({uv[0], uab, uca});
    triangles.push_back({ab, tri[1], bc});
    uvs.push_back({uab, uv[1], ubc});
    triangles.push_back({ca, bc, tri[2]});
    uvs.push_back({uca, ubc, uv[2]});
    triangles.push_back({ab, bc, ca});
    uvs.push_back({uab, ubc, uca});
  }
  return make_proxy_mesh(std::move(positions), std::move(triangles), std::move(uvs),
                         std::move(normals));
}

std::vector<Camera> orbit_cameras(int count, double distance, int size, double fov_x,
                                  const Vec3& target) {
  std::vector<Camera> out;
  for (const auto& d : fibonacci_directions(count)) {
    Vec3 up = std::abs(d.z()) > 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
    out.push_back(Camera::from_fov(size, size, fov_x, look_at(target + distance * d, target, up)));
  }
  return out;
}

GaussianTexture reference_texture(const ProxyMesh& mesh, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 freq(2.0 + unit(rng), 2.0 + unit(rng), 2.0 + unit(rng));
  const Vec3 phase(6.0 * unit(rng), 6.0 * unit(rng), 6.0 * unit(rng));
  InitConfig init;
  init.scale_factor = 0.35;
  init.opacity = 0.95;
  GaussianTexture gt = init_gaussians(mesh, init);
  for (auto& g : gt.gaussians) {
    // theta_d = 0 keeps the down axis along w: a thin disk on the surface.
    g.log_s_d = std::log(0.02 * mean_uv_edge_length(mesh, g.tri_id));
    g.log_s_f += 0.2 * (unit(rng) - 0.5);
    Vec3 p = world_gaussian(g, mesh).mean;
    for (int c = 0; c < 3; ++c) {
      g.color[c] = 0.5 + 0.4 * std::sin(freq[c] * p[(c + 1) % 3] + phase[c] + p[c]);
    }
  }
  return gt;
}

FrameSet render_frames(const GaussianTexture& gt, const ProxyMesh& mesh,
                       const std::vector<Camera>& cameras, const Vec3& background,
                       const RenderSettings& settings) {
  FrameSet set;
  const auto world = world_gaussians(gt, mesh);
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
    set.frames.push_back({name, cameras[i], render(world, cameras[i], background, settings)});
  }
  return set;
}

}  // namespace gtex::fixtures
