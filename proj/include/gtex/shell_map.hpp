#pragma once

#include "gtex/common.hpp"
#include "gtex/mesh.hpp"

#include <array>
#include <cstdint>

namespace gtex {

/// A point expressed in a triangle's (possibly extrapolated) barycentric frame.
struct BarycentricPoint {
  Vec3 phi;           // sums to 1, components may be negative
  double phi_w = 0.0; // normal offset in world units
  std::uint32_t tri_id = 0;
};

/// Signed-area barycentric coordinates of `uv` w.r.t. the UV triangle `corners`.
Vec3 uv_to_barycentric(const Vec2& uv, const TriangleUv& corners);

/// phi_w = u_w * (phi . omega)
double adjusted_w(const Vec3& phi, double u_w, const Vec3& omega);

/// v = sum(phi_i v_i) + phi_w * sum(phi_i n_i)
Vec3 barycentric_to_world(const BarycentricPoint& p, const ProxyMesh& mesh);

/// Pulls an outside point toward the centroid until its smallest component is 0.
Vec3 clamp_barycentric(const Vec3& phi);

/// Index of the smallest component; lowest index wins ties.
int argmin3(const Vec3& phi);

/// Everything about one triangle that the texture->world map needs, with the
/// UV->barycentric map stored in affine form phi = offset + du * u + dv * v.
struct ShellTriangle {
  std::array<Vec3, 3> position;
  std::array<Vec3, 3> normal;
  Vec3 omega;
  Vec3 offset;
  Vec3 du;
  Vec3 dv;

  static ShellTriangle from_mesh(const ProxyMesh& mesh, std::uint32_t tri);

  Vec3 barycentric(double u, double v) const { return offset + du * u + dv * v; }
};

/// Forward state of one texture point pushed through the shell map.
struct ShellSample {
  Vec3 phi;
  double u_w = 0.0;
  double scaler = 0.0;  // phi . omega
  double phi_w = 0.0;
  Vec3 normal_sum;      // sum(phi_i n_i), not normalized
  Vec3 world;
};

/// Maps barycentric `phi` with texture height `u_w` to world space.
ShellSample shell_eval_phi(const ShellTriangle& tri, const Vec3& phi, double u_w);

/// Maps the texture point (u, v, w) to world space.
inline ShellSample shell_eval(const ShellTriangle& tri, const Vec3& tex) {
  return shell_eval_phi(tri, tri.barycentric(tex.x(), tex.y()), tex.z());
}

/// Reverse-mode step of shell_eval_phi: given dL/dworld plus any direct dL/dphi
/// and dL/dphi_w, accumulates dL/dphi into `grad_phi` and returns dL/du_w.
double shell_backward_phi(const ShellTriangle& tri, const ShellSample& s, const Vec3& grad_world,
                          const Vec3& extra_phi, double extra_phi_w, Vec3& grad_phi);

/// Reverse-mode step of shell_eval: returns dL/d(u, v, w).
Vec3 shell_backward(const ShellTriangle& tri, const ShellSample& s, const Vec3& grad_world,
                    const Vec3& extra_phi = Vec3::Zero(), double extra_phi_w = 0.0);

/// Barycentric regularizer term of one texture point with its gradients.
struct BarycentricPenalty {
  double value = 0.0;      // ReLU(|F(phi_hat) - F(phi)|^2 - eps)
  double deviation2 = 0.0; // |F(phi_hat) - F(phi)|^2
  Vec3 grad_phi = Vec3::Zero();
  double grad_u_w = 0.0;
};

/// The clamp reference keeps the same texture height u_w, so its offset is
/// u_w * (phi_hat . omega).
BarycentricPenalty barycentric_penalty(const ShellTriangle& tri, const Vec3& phi, double u_w,
                                       double epsilon);

}  // namespace gtex
