#include "gtex/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace gtex {

namespace {

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(255.0 * v));
}

}  // namespace

void write_png(const ImageRGBA& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), to_byte);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error("cannot write PNG " + path.string() + ": " + msg);
  }
}

ImageRGBA read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error("cannot decode PNG " + path.string() + ": " + msg);
  }
  ImageRGBA image(static_cast<int>(png.width), static_cast<int>(png.height));
  for (std::size_t i = 0; i < bytes.size(); ++i) image.data[i] = bytes[i] / 255.0;
  return image;
}

ImageRGBA composite_over(const ImageRGBA& image, const Vec3& background) {
  ImageRGBA out = image;
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    double a = out.data[p * 4 + 3];
    for (int c = 0; c < 3; ++c) out.data[p * 4 + c] = out.data[p * 4 + c] * a + background[c] * (1.0 - a);
  }
  return out;
}

ImageRGBA quantize8(const ImageRGBA& image) {
  ImageRGBA out = image;
  for (auto& v : out.data) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace gtex
