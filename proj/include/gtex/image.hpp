#pragma once

#include "gtex/common.hpp"

#include <filesystem>
#include <vector>

namespace gtex {

/// Row-major RGBA image, channel 3 holds accumulated alpha. Also used to carry
/// per-pixel gradients, in which case values are unbounded.
struct ImageRGBA {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImageRGBA() = default;
  ImageRGBA(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 4, fill) {}

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 4 + c]; }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 4 + c];
  }
  bool same_size(const ImageRGBA& o) const noexcept {
    return width == o.width && height == o.height;
  }
};

/// 8-bit RGBA, each channel quantized as round(255 * clamp(v, 0, 1)).
void write_png(const ImageRGBA& image, const std::filesystem::path& path);

/// Reads any 8/16-bit PNG; gray and RGB inputs get alpha = 1.
ImageRGBA read_png(const std::filesystem::path& path);

/// Replaces RGB with RGB * alpha + background * (1 - alpha) and keeps alpha.
ImageRGBA composite_over(const ImageRGBA& image, const Vec3& background);

/// Applies the PNG quantization in memory.
ImageRGBA quantize8(const ImageRGBA& image);

}  // namespace gtex
