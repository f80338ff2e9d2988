#include "gtex/projection.hpp"

namespace gtex {

ProjectionRecord project_gaussian(const TexGaussian& g, const ShellTriangle& tri, int sh_degree) {
  ProjectionRecord rec;
  rec.bounds = derive_bounding_points(g);
  for (int k = 0; k < 6; ++k) rec.samples[k] = shell_eval(tri, rec.bounds.points[k]);
  rec.center = shell_eval(tri, rec.bounds.center);
  const Vec3& vo = rec.center.world;
  rec.shear.col(0) = rec.samples[kRightHi].world - vo;
  rec.shear.col(1) = rec.samples[kDownHi].world - vo;
  rec.shear.col(2) = rec.samples[kForwardHi].world - vo;

  auto& w = rec.world;
  w.mean = vo;
  w.cov = rec.shear * rec.shear.transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) w.cov(j, i) = w.cov(i, j);
  }
  w.alpha = g.opacity();
  w.sh_degree = sh_degree;
  w.color = g.color;
  return rec;
}

WorldGaussian world_gaussian(const TexGaussian& g, const ProxyMesh& mesh, int sh_degree) {
  return project_gaussian(g, ShellTriangle::from_mesh(mesh, g.tri_id), sh_degree).world;
}

std::vector<WorldGaussian> world_gaussians(const GaussianTexture& gt, const ProxyMesh& mesh) {
  std::vector<ShellTriangle> tris;
  tris.reserve(mesh.triangle_count());
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    tris.push_back(ShellTriangle::from_mesh(mesh, t));
  }
  std::vector<WorldGaussian> out;
  out.reserve(gt.size());
  for (const auto& g : gt.gaussians) {
    if (g.tri_id >= tris.size()) throw Error("Gaussian bound to a missing triangle");
    out.push_back(project_gaussian(g, tris[g.tri_id], gt.sh_degree).world);
  }
  return out;
}

void projection_backward(const TexGaussian& g, const ShellTriangle& tri,
                         const ProjectionRecord& rec, const Vec3& grad_mean, const Mat3& grad_cov,
                         const std::array<PointGrad, 6>& point_grads, double* grad) {
  // cov = S S^T
  Mat3 g_shear = (grad_cov + grad_cov.transpose()) * rec.shear;
  std::array<Vec3, 6> g_world;
  g_world.fill(Vec3::Zero());
  g_world[kRightHi] = g_shear.col(0);
  g_world[kDownHi] = g_shear.col(1);
  g_world[kForwardHi] = g_shear.col(2);
  Vec3 g_center_world = grad_mean - g_shear.col(0) - g_shear.col(1) - g_shear.col(2);

  std::array<Vec3, 6> g_points;
  for (int k = 0; k < 6; ++k) {
    const auto& pg = point_grads[k];
    g_points[k] = shell_backward(tri, rec.samples[k], g_world[k], pg.phi, pg.phi_w);
    g_points[k].z() += pg.u_w;
  }
  Vec3 g_center = shell_backward(tri, rec.center, g_center_world);
  bounding_points_backward(g, rec.bounds, g_points, g_center, grad);
}

}  // namespace gtex
