#pragma once

#include "gtex/camera.hpp"
#include "gtex/common.hpp"
#include "gtex/image.hpp"
#include "gtex/projection.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gtex {

/// Rasterizer constants; defaults follow the original splatting implementation.
struct RenderSettings {
  int threads = 0;  // 0 = hardware concurrency
  int tile_size = 16;
  double dilation = 0.3;
  double alpha_min = 1.0 / 255.0;
  double alpha_max = 0.99;
  double transmittance_min = 1e-4;
  double sigma_extent = 3.0;
};

struct ScreenProjection {
  Vec2 mean;
  Mat2 cov;  // includes dilation
  double depth = 0.0;
};

/// Local-affine (EWA) projection; nullopt when depth is outside (near, far).
std::optional<ScreenProjection> project_to_screen(const WorldGaussian& wg, const Camera& cam,
                                                  double dilation = 0.3);

/// Real spherical-harmonics color of `wg` seen along `dir` (unit vector).
Vec3 evaluate_color(const WorldGaussian& wg, const Vec3& dir);

/// Per-Gaussian screen data cached by the forward pass.
struct ScreenGaussian {
  bool visible = false;
  Vec3 cam_pos;
  Vec2 mean;
  Mat2 cov;
  Mat2 conic;
  double depth = 0.0;
  double radius = 0.0;
  Vec3 view_dir;
  Vec3 rgb;
};

/// Everything the reverse pass needs from a forward render.
struct RenderState {
  Camera camera;
  Vec3 background;
  RenderSettings settings;
  std::vector<ScreenGaussian> screen;
  std::vector<std::uint32_t> order;  // visible Gaussians, front to back
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> tile_begin;  // tiles_x * tiles_y + 1 offsets
  std::vector<std::uint32_t> tile_entries;
  std::vector<double> final_transmittance;
  std::vector<std::uint32_t> last_entry;  // per pixel: entries consumed in its tile list
  ImageRGBA image;
};

RenderState rasterize(std::span<const WorldGaussian> gaussians, const Camera& cam,
                      const Vec3& background, const RenderSettings& settings = {});

ImageRGBA render(std::span<const WorldGaussian> gaussians, const Camera& cam,
                 const Vec3& background, const RenderSettings& settings = {});

struct WorldGaussianGrad {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
  double alpha = 0.0;
  std::array<double, kMaxColorValues> color{};
  Vec2 mean2d = Vec2::Zero();  // screen-space, pixels
};

/// Reverse pass of `rasterize`. `grad_image` carries dL/dRGB in channels 0..2
/// and dL/dalpha in channel 3. Per-tile partials are reduced in tile order.
std::vector<WorldGaussianGrad> render_backward(const RenderState& state,
                                               std::span<const WorldGaussian> gaussians,
                                               const ImageRGBA& grad_image);

}  // namespace gtex
