#pragma once

#include "gtex/camera.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/image.hpp"
#include "gtex/mesh.hpp"
#include "gtex/renderer.hpp"

#include <array>
#include <filesystem>
#include <variant>
#include <vector>

namespace gtex {

/// p' = p + direction * amplitude * sin(2 pi frequency (p . axis) + phase_rate frame)
struct SineDeformer {
  Vec3 axis = Vec3::UnitY();
  Vec3 direction = Vec3::UnitX();
  double amplitude = 0.1;
  double frequency = 0.5;
  double phase_rate = 0.2;
};

/// Trilinear free-form deformation through a control grid spanning a rest box.
struct LatticeDeformer {
  std::array<int, 3> dims{2, 2, 2};
  Vec3 box_min = Vec3::Constant(-1.0);
  Vec3 box_max = Vec3::Constant(1.0);
  // frames[f][i + nx * (j + ny * k)]
  std::vector<std::vector<Vec3>> frames;

  /// Control points at their rest positions.
  std::vector<Vec3> rest_points() const;
  static LatticeDeformer load(const std::filesystem::path& json_path);
};

/// Baked per-frame vertex positions sharing the rest mesh topology.
struct MeshSequence {
  std::vector<std::vector<Vec3>> frames;

  /// Reads frame_%04d.obj files in order, checking topology against `rest`.
  static MeshSequence load(const std::filesystem::path& dir, const ProxyMesh& rest);
};

using Deformer = std::variant<SineDeformer, LatticeDeformer, MeshSequence>;

struct DeformResult {
  ProxyMesh mesh;
  std::size_t clamped = 0;  // lattice: vertices clamped into the rest box
};

/// New positions from the deformer, normals recomputed, UVs and w-scalers kept
/// at their rest values.
DeformResult apply_deformer(const ProxyMesh& mesh, const Deformer& d, int frame);

/// Positions replaced wholesale; shared by all deformers.
ProxyMesh with_positions(const ProxyMesh& rest, std::vector<Vec3> positions);

std::vector<ImageRGBA> render_animation(const GaussianTexture& gt, const ProxyMesh& mesh,
                                        const Deformer& d, const Camera& cam, int frames,
                                        const Vec3& background = Vec3::Zero(),
                                        const RenderSettings& settings = {});

}  // namespace gtex
