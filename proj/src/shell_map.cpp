#include "gtex/shell_map.hpp"

#include <cmath>

namespace gtex {

namespace {

double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

}  // namespace

Vec3 uv_to_barycentric(const Vec2& uv, const TriangleUv& c) {
  double area = signed_area2(c[0], c[1], c[2]);
  if (!(std::abs(area) * 0.5 > 1e-12)) throw Error("degenerate UV triangle");
  return Vec3(signed_area2(uv, c[1], c[2]) / area, signed_area2(c[0], uv, c[2]) / area,
              signed_area2(c[0], c[1], uv) / area);
}

double adjusted_w(const Vec3& phi, double u_w, const Vec3& omega) { return u_w * phi.dot(omega); }

Vec3 barycentric_to_world(const BarycentricPoint& p, const ProxyMesh& mesh) {
  const auto& tri = mesh.triangles.at(p.tri_id);
  Vec3 base = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    base += p.phi[i] * mesh.positions[tri[i]];
    normal += p.phi[i] * mesh.normals[tri[i]];
  }
  return base + p.phi_w * normal;
}

int argmin3(const Vec3& phi) {
  int k = 0;
  if (phi[1] < phi[k]) k = 1;
  if (phi[2] < phi[k]) k = 2;
  return k;
}

Vec3 clamp_barycentric(const Vec3& phi) {
  int k = argmin3(phi);
  double m = phi[k];
  if (m >= 0.0) return phi;
  double t = 1.0 / (1.0 - 3.0 * m);
  Vec3 out = Vec3::Constant((1.0 - t) / 3.0) + t * phi;
  out[k] = 0.0;  // equals the formula's value up to rounding
  return out;
}

ShellTriangle ShellTriangle::from_mesh(const ProxyMesh& mesh, std::uint32_t t) {
  ShellTriangle s;
  const auto& tri = mesh.triangles.at(t);
  for (int i = 0; i < 3; ++i) {
    s.position[i] = mesh.positions[tri[i]];
    s.normal[i] = mesh.normals[tri[i]];
    s.omega[i] = mesh.omega_vert[tri[i]];
  }
  const auto& a = mesh.uvs[t][0];
  const auto& b = mesh.uvs[t][1];
  const auto& c = mesh.uvs[t][2];
  double area = signed_area2(a, b, c);
  if (!(std::abs(area) * 0.5 > 1e-12)) throw Error("degenerate UV triangle " + std::to_string(t));
  s.offset = Vec3(b.x() * c.y() - b.y() * c.x(), c.x() * a.y() - c.y() * a.x(),
                  a.x() * b.y() - a.y() * b.x()) / area;
  s.du = Vec3(b.y() - c.y(), c.y() - a.y(), a.y() - b.y()) / area;
  s.dv = Vec3(c.x() - b.x(), a.x() - c.x(), b.x() - a.x()) / area;
  return s;
}

ShellSample shell_eval_phi(const ShellTriangle& tri, const Vec3& phi, double u_w) {
  ShellSample s;
  s.phi = phi;
  s.u_w = u_w;
  s.scaler = phi.dot(tri.omega);
  s.phi_w = u_w * s.scaler;
  s.normal_sum = phi[0] * tri.normal[0] + phi[1] * tri.normal[1] + phi[2] * tri.normal[2];
  s.world = phi[0] * tri.position[0] + phi[1] * tri.position[1] + phi[2] * tri.position[2] +
            s.phi_w * s.normal_sum;
  return s;
}

double shell_backward_phi(const ShellTriangle& tri, const ShellSample& s, const Vec3& g,
                          const Vec3& extra_phi, double extra_phi_w, Vec3& grad_phi) {
  double g_phi_w = g.dot(s.normal_sum) + extra_phi_w;
  for (int i = 0; i < 3; ++i) {
    grad_phi[i] += g.dot(tri.position[i]) + s.phi_w * g.dot(tri.normal[i]) +
                   g_phi_w * s.u_w * tri.omega[i] + extra_phi[i];
  }
  return g_phi_w * s.scaler;
}

Vec3 shell_backward(const ShellTriangle& tri, const ShellSample& s, const Vec3& grad_world,
                    const Vec3& extra_phi, double extra_phi_w) {
  Vec3 g_phi = Vec3::Zero();
  double g_w = shell_backward_phi(tri, s, grad_world, extra_phi, extra_phi_w, g_phi);
  return Vec3(g_phi.dot(tri.du), g_phi.dot(tri.dv), g_w);
}

BarycentricPenalty barycentric_penalty(const ShellTriangle& tri, const Vec3& phi, double u_w,
                                       double epsilon) {
  BarycentricPenalty out;
  int k = argmin3(phi);
  double m = phi[k];
  if (m >= 0.0) return out;
  double t = 1.0 / (1.0 - 3.0 * m);
  Vec3 phi_hat = clamp_barycentric(phi);
  ShellSample ref = shell_eval_phi(tri, phi_hat, u_w);
  ShellSample cur = shell_eval_phi(tri, phi, u_w);
  Vec3 d = ref.world - cur.world;
  out.deviation2 = d.squaredNorm();
  double excess = out.deviation2 - epsilon;
  if (!(excess > 0.0)) return out;  // ReLU'(0) = 0
  out.value = excess;

  Vec3 g = 2.0 * d;
  Vec3 g_hat = Vec3::Zero();
  double g_w = shell_backward_phi(tri, ref, g, Vec3::Zero(), 0.0, g_hat);
  g_w += shell_backward_phi(tri, cur, -g, Vec3::Zero(), 0.0, out.grad_phi);

  // phi_hat_i = (1 - t) / 3 + t phi_i with t = 1 / (1 - 3 phi_k)
  double g_t = 0.0;
  for (int i = 0; i < 3; ++i) {
    out.grad_phi[i] += t * g_hat[i];
    g_t += g_hat[i] * (phi[i] - 1.0 / 3.0);
  }
  out.grad_phi[k] += g_t * 3.0 * t * t;
  out.grad_u_w = g_w;
  return out;
}

}  // namespace gtex
