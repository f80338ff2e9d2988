#pragma once

#include "gtex/common.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/mesh.hpp"
#include "gtex/shell_map.hpp"

#include <array>

namespace gtex {

/// Renderable world-space Gaussian.
struct WorldGaussian {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
  double alpha = 0.0;
  int sh_degree = 0;
  std::array<double, kMaxColorValues> color{};
};

/// Forward record of one texture Gaussian pushed to world space.
struct ProjectionRecord {
  BoundingPoints bounds;
  std::array<ShellSample, 6> samples;
  ShellSample center;
  Mat3 shear;  // columns: v_r_hi - v_o, v_d_hi - v_o, v_f_hi - v_o
  WorldGaussian world;
};

ProjectionRecord project_gaussian(const TexGaussian& g, const ShellTriangle& tri, int sh_degree);

WorldGaussian world_gaussian(const TexGaussian& g, const ProxyMesh& mesh, int sh_degree = 0);

std::vector<WorldGaussian> world_gaussians(const GaussianTexture& gt, const ProxyMesh& mesh);

/// Extra per-bounding-point gradients entering the shell map directly (the
/// regularizers act on barycentric coordinates, not on world points).
struct PointGrad {
  Vec3 phi = Vec3::Zero();
  double phi_w = 0.0;
  double u_w = 0.0;
};

/// Reverse pass of project_gaussian. `grad` is the flat parameter gradient of
/// `g` and is accumulated into, not overwritten. Color and opacity gradients
/// are the caller's business.
void projection_backward(const TexGaussian& g, const ShellTriangle& tri,
                         const ProjectionRecord& rec, const Vec3& grad_mean, const Mat3& grad_cov,
                         const std::array<PointGrad, 6>& point_grads, double* grad);

}  // namespace gtex
