#include "gtex/renderer.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>

namespace gtex {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

// Real SH basis (DC term fixed to 1) and, optionally, its gradient w.r.t. the
// unit direction components.
void sh_basis(int degree, const Vec3& d, double* basis, Vec3* grad) {
  const double x = d.x(), y = d.y(), z = d.z();
  basis[0] = 1.0;
  if (grad) grad[0] = Vec3::Zero();
  if (degree < 1) return;
  basis[1] = -kC1 * y;
  basis[2] = kC1 * z;
  basis[3] = -kC1 * x;
  if (grad) {
    grad[1] = Vec3(0, -kC1, 0);
    grad[2] = Vec3(0, 0, kC1);
    grad[3] = Vec3(-kC1, 0, 0);
  }
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  basis[4] = kC2[0] * x * y;
  basis[5] = kC2[1] * y * z;
  basis[6] = kC2[2] * (2 * zz - xx - yy);
  basis[7] = kC2[3] * x * z;
  basis[8] = kC2[4] * (xx - yy);
  if (grad) {
    grad[4] = kC2[0] * Vec3(y, x, 0);
    grad[5] = kC2[1] * Vec3(0, z, y);
    grad[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
    grad[7] = kC2[3] * Vec3(z, 0, x);
    grad[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
  }
  if (degree < 3) return;
  basis[9] = kC3[0] * y * (3 * xx - yy);
  basis[10] = kC3[1] * x * y * z;
  basis[11] = kC3[2] * y * (4 * zz - xx - yy);
  basis[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
  basis[13] = kC3[4] * x * (4 * zz - xx - yy);
  basis[14] = kC3[5] * z * (xx - yy);
  basis[15] = kC3[6] * x * (xx - 3 * yy);
  if (grad) {
    grad[9] = kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
    grad[10] = kC3[1] * Vec3(y * z, x * z, x * y);
    grad[11] = kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
    grad[12] = kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
    grad[13] = kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
    grad[14] = kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
    grad[15] = kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
  }
}

int coefficient_count(int degree) { return (degree + 1) * (degree + 1); }

// Per-entry reverse accumulators: mean2d(2), conic(3), alpha, rgb(3).
constexpr int kAccWidth = 9;

struct PixelWalk {
  double x;
  double y;
};

inline bool inside_footprint(const ScreenGaussian& g, double x, double y) {
  return std::abs(x - g.mean.x()) <= g.radius && std::abs(y - g.mean.y()) <= g.radius;
}

inline double gaussian_power(const ScreenGaussian& g, double dx, double dy) {
  return -0.5 * (g.conic(0, 0) * dx * dx + g.conic(1, 1) * dy * dy) - g.conic(0, 1) * dx * dy;
}

}  // namespace

std::optional<ScreenProjection> project_to_screen(const WorldGaussian& wg, const Camera& cam,
                                                  double dilation) {
  Mat3 r = cam.rotation();
  Vec3 t = r * wg.mean + cam.translation();
  if (!(t.z() > cam.near) || !(t.z() < cam.far)) return std::nullopt;
  const double iz = 1.0 / t.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * t.y() * iz * iz;
  ScreenProjection p;
  p.mean = Vec2(cam.fx * t.x() * iz + cam.cx, cam.fy * t.y() * iz + cam.cy);
  Mat3 m = r * wg.cov * r.transpose();
  p.cov = j * m * j.transpose();
  p.cov(1, 0) = p.cov(0, 1);
  p.cov += dilation * Mat2::Identity();
  p.depth = t.z();
  return p;
}

Vec3 evaluate_color(const WorldGaussian& wg, const Vec3& dir) {
  double basis[16];
  sh_basis(wg.sh_degree, dir, basis, nullptr);
  Vec3 rgb = Vec3::Zero();
  for (int k = 0; k < coefficient_count(wg.sh_degree); ++k) {
    for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * wg.color[3 * k + c];
  }
  return rgb;
}

RenderState rasterize(std::span<const WorldGaussian> gaussians, const Camera& cam,
                      const Vec3& background, const RenderSettings& settings) {
  cam.validate();
  if (settings.tile_size <= 0) throw Error("tile size must be positive");
  RenderState st;
  st.camera = cam;
  st.background = background;
  st.settings = settings;
  st.screen.resize(gaussians.size());
  const Vec3 eye = cam.center();
  const int w = cam.width;
  const int h = cam.height;

  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& wg = gaussians[i];
    auto& sg = st.screen[i];
    auto proj = project_to_screen(wg, cam, settings.dilation);
    if (!proj) continue;
    const Mat2& c = proj->cov;
    double det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
    if (!(det > 0.0)) throw Error("screen-space covariance is not invertible");
    sg.mean = proj->mean;
    sg.cov = c;
    sg.conic << c(1, 1) / det, -c(0, 1) / det, -c(0, 1) / det, c(0, 0) / det;
    sg.depth = proj->depth;
    double mid = 0.5 * (c(0, 0) + c(1, 1));
    double lambda = mid + std::sqrt(std::max(0.0, mid * mid - det));
    sg.radius = std::ceil(settings.sigma_extent * std::sqrt(lambda));
    if (sg.mean.x() + sg.radius < 0.0 || sg.mean.x() - sg.radius > w - 1 ||
        sg.mean.y() + sg.radius < 0.0 || sg.mean.y() - sg.radius > h - 1) {
      continue;
    }
    sg.cam_pos = cam.rotation() * wg.mean + cam.translation();
    sg.view_dir = (wg.mean - eye).normalized();
    sg.rgb = evaluate_color(wg, sg.view_dir);
    sg.visible = true;
    st.order.push_back(static_cast<std::uint32_t>(i));
  }
  std::sort(st.order.begin(), st.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    double da = st.screen[a].depth;
    double db = st.screen[b].depth;
    return da < db || (da == db && a < b);
  });

  const int ts = settings.tile_size;
  st.tiles_x = (w + ts - 1) / ts;
  st.tiles_y = (h + ts - 1) / ts;
  const std::size_t tile_count = static_cast<std::size_t>(st.tiles_x) * st.tiles_y;
  auto tile_range = [&](const ScreenGaussian& g, int& x0, int& x1, int& y0, int& y1) {
    int px0 = std::max(0, static_cast<int>(std::ceil(g.mean.x() - g.radius)));
    int px1 = std::min(w - 1, static_cast<int>(std::floor(g.mean.x() + g.radius)));
    int py0 = std::max(0, static_cast<int>(std::ceil(g.mean.y() - g.radius)));
    int py1 = std::min(h - 1, static_cast<int>(std::floor(g.mean.y() + g.radius)));
    if (px0 > px1 || py0 > py1) return false;
    x0 = px0 / ts;
    x1 = px1 / ts;
    y0 = py0 / ts;
    y1 = py1 / ts;
    return true;
  };
  std::vector<std::uint32_t> counts(tile_count + 1, 0);
  for (auto id : st.order) {
    int x0, x1, y0, y1;
    if (!tile_range(st.screen[id], x0, x1, y0, y1)) continue;
    for (int ty = y0; ty <= y1; ++ty) {
      for (int tx = x0; tx <= x1; ++tx) ++counts[static_cast<std::size_t>(ty) * st.tiles_x + tx + 1];
    }
  }
  for (std::size_t t = 0; t < tile_count; ++t) counts[t + 1] += counts[t];
  st.tile_begin = counts;
  st.tile_entries.resize(counts.back());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (auto id : st.order) {
    int x0, x1, y0, y1;
    if (!tile_range(st.screen[id], x0, x1, y0, y1)) continue;
    for (int ty = y0; ty <= y1; ++ty) {
      for (int tx = x0; tx <= x1; ++tx) {
        st.tile_entries[fill[static_cast<std::size_t>(ty) * st.tiles_x + tx]++] = id;
      }
    }
  }

  st.image = ImageRGBA(w, h);
  st.final_transmittance.assign(static_cast<std::size_t>(w) * h, 1.0);
  st.last_entry.assign(static_cast<std::size_t>(w) * h, 0);

  detail::parallel_for(tile_count, settings.threads, [&](std::size_t tile) {
    const int tx = static_cast<int>(tile % st.tiles_x);
    const int ty = static_cast<int>(tile / st.tiles_x);
    const std::uint32_t begin = st.tile_begin[tile];
    const std::uint32_t end = st.tile_begin[tile + 1];
    for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
        double transmittance = 1.0;
        Vec3 color = Vec3::Zero();
        std::uint32_t last = 0;
        for (std::uint32_t e = begin; e < end; ++e) {
          const auto& g = st.screen[st.tile_entries[e]];
          if (!inside_footprint(g, x, y)) continue;
          double power = gaussian_power(g, g.mean.x() - x, g.mean.y() - y);
          if (power > 0.0) continue;
          double a = std::min(settings.alpha_max, gaussians[st.tile_entries[e]].alpha * std::exp(power));
          if (a < settings.alpha_min) continue;
          double next = transmittance * (1.0 - a);
          if (next < settings.transmittance_min) break;
          color += g.rgb * (a * transmittance);
          transmittance = next;
          last = e - begin + 1;
        }
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        st.final_transmittance[p] = transmittance;
        st.last_entry[p] = last;
        for (int c = 0; c < 3; ++c) st.image.data[p * 4 + c] = color[c] + transmittance * background[c];
        st.image.data[p * 4 + 3] = 1.0 - transmittance;
      }
    }
  });
  return st;
}

ImageRGBA render(std::span<const WorldGaussian> gaussians, const Camera& cam,
                 const Vec3& background, const RenderSettings& settings) {
  return rasterize(gaussians, cam, background, settings).image;
}

std::vector<WorldGaussianGrad> render_backward(const RenderState& st,
                                               std::span<const WorldGaussian> gaussians,
                                               const ImageRGBA& grad_image) {
  const Camera& cam = st.camera;
  const int w = cam.width;
  const int h = cam.height;
  if (grad_image.width != w || grad_image.height != h) throw Error("gradient image size mismatch");
  if (gaussians.size() != st.screen.size()) throw Error("Gaussian list changed since forward pass");
  const auto& settings = st.settings;
  const int ts = settings.tile_size;
  const std::size_t tile_count = static_cast<std::size_t>(st.tiles_x) * st.tiles_y;
  std::vector<double> acc(st.tile_entries.size() * kAccWidth, 0.0);

  detail::parallel_for(tile_count, settings.threads, [&](std::size_t tile) {
    const int tx = static_cast<int>(tile % st.tiles_x);
    const int ty = static_cast<int>(tile / st.tiles_x);
    const std::uint32_t begin = st.tile_begin[tile];
    for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const Vec3 d_color(grad_image.data[p * 4], grad_image.data[p * 4 + 1],
                           grad_image.data[p * 4 + 2]);
        const double d_alpha_out = grad_image.data[p * 4 + 3];
        const double t_final = st.final_transmittance[p];
        double transmittance = t_final;
        Vec3 behind = t_final * st.background;
        for (std::uint32_t k = st.last_entry[p]; k-- > 0;) {
          const std::uint32_t e = begin + k;
          const std::uint32_t id = st.tile_entries[e];
          const auto& g = st.screen[id];
          if (!inside_footprint(g, x, y)) continue;
          const double dx = g.mean.x() - x;
          const double dy = g.mean.y() - y;
          const double power = gaussian_power(g, dx, dy);
          if (power > 0.0) continue;
          const double gauss = std::exp(power);
          const double raw = gaussians[id].alpha * gauss;
          const double a = std::min(settings.alpha_max, raw);
          if (a < settings.alpha_min) continue;

          const double one_minus = 1.0 - a;
          const double t_before = transmittance / one_minus;
          double* out = &acc[static_cast<std::size_t>(e) * kAccWidth];
          double d_a = 0.0;
          for (int c = 0; c < 3; ++c) {
            out[6 + c] += d_color[c] * a * t_before;
            d_a += d_color[c] * (g.rgb[c] * t_before - behind[c] / one_minus);
          }
          d_a += d_alpha_out * t_final / one_minus;
          behind += g.rgb * (a * t_before);
          transmittance = t_before;

          if (raw > settings.alpha_max) continue;  // clipped: flat in alpha and footprint
          out[5] += d_a * gauss;
          const double d_power = d_a * a;
          out[0] += d_power * -(g.conic(0, 0) * dx + g.conic(0, 1) * dy);
          out[1] += d_power * -(g.conic(1, 1) * dy + g.conic(0, 1) * dx);
          out[2] += d_power * -0.5 * dx * dx;
          out[3] += d_power * -dx * dy;
          out[4] += d_power * -0.5 * dy * dy;
        }
      }
    }
  });

  // Reduce per-tile partials in tile order.
  std::vector<std::array<double, kAccWidth>> screen_grad(gaussians.size());
  for (auto& s : screen_grad) s.fill(0.0);
  for (std::size_t e = 0; e < st.tile_entries.size(); ++e) {
    auto& dst = screen_grad[st.tile_entries[e]];
    const double* src = &acc[e * kAccWidth];
    for (int k = 0; k < kAccWidth; ++k) dst[k] += src[k];
  }

  std::vector<WorldGaussianGrad> grads(gaussians.size());
  const Mat3 r = cam.rotation();
  const Vec3 eye = cam.center();
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& sg = st.screen[i];
    if (!sg.visible) continue;
    const auto& wg = gaussians[i];
    const auto& s = screen_grad[i];
    auto& out = grads[i];
    out.mean2d = Vec2(s[0], s[1]);
    out.alpha = s[5];

    // conic = cov2^-1, with the off-diagonal shared by both entries.
    Mat2 g_conic;
    g_conic << s[2], 0.5 * s[3], 0.5 * s[3], s[4];
    Mat2 g_cov2 = -sg.conic * g_conic * sg.conic;

    const Vec3& t = sg.cam_pos;
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz2, 0.0, cam.fy * iz, -cam.fy * t.y() * iz2;
    const Mat3 m = r * wg.cov * r.transpose();
    const Mat3 g_m = j.transpose() * g_cov2 * j;
    const Eigen::Matrix<double, 2, 3> g_j = 2.0 * g_cov2 * j * m;
    out.cov = r.transpose() * g_m * r;

    Vec3 g_t;
    g_t.x() = s[0] * cam.fx * iz + g_j(0, 2) * -cam.fx * iz2;
    g_t.y() = s[1] * cam.fy * iz + g_j(1, 2) * -cam.fy * iz2;
    g_t.z() = s[0] * -cam.fx * t.x() * iz2 + s[1] * -cam.fy * t.y() * iz2 +
              g_j(0, 0) * -cam.fx * iz2 + g_j(0, 2) * 2.0 * cam.fx * t.x() * iz2 * iz +
              g_j(1, 1) * -cam.fy * iz2 + g_j(1, 2) * 2.0 * cam.fy * t.y() * iz2 * iz;
    out.mean = r.transpose() * g_t;

    const Vec3 g_rgb(s[6], s[7], s[8]);
    double basis[16];
    Vec3 basis_grad[16];
    sh_basis(wg.sh_degree, sg.view_dir, basis, basis_grad);
    Vec3 g_dir = Vec3::Zero();
    for (int k = 0; k < coefficient_count(wg.sh_degree); ++k) {
      double gk = 0.0;
      for (int c = 0; c < 3; ++c) {
        out.color[3 * k + c] = g_rgb[c] * basis[k];
        gk += g_rgb[c] * wg.color[3 * k + c];
      }
      g_dir += gk * basis_grad[k];
    }
    if (wg.sh_degree > 0) {
      const Vec3 v = wg.mean - eye;
      const Vec3& d = sg.view_dir;
      out.mean += (g_dir - d * d.dot(g_dir)) / v.norm();
    }
  }
  return grads;
}

}  // namespace gtex
