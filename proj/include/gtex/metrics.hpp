#pragma once

#include "gtex/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gtex {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over RGB; identical images give kPsnrCap.
double psnr(const ImageRGBA& a, const ImageRGBA& b);

/// Mean SSIM over RGB channels, 11x11 Gaussian window (sigma 1.5), evaluated at
/// every window position fully inside the image. Images need at least 11x11.
double ssim(const ImageRGBA& a, const ImageRGBA& b);

/// Same as ssim(); additionally writes dSSIM/da into channels 0..2 of
/// `grad_a` (channel 3 zero).
double ssim(const ImageRGBA& a, const ImageRGBA& b, ImageRGBA* grad_a);

/// IoU of the alpha channels binarized at `threshold`; empty union gives 1.
double iou(const ImageRGBA& a, const ImageRGBA& b, double threshold = 0.5);

struct MetricRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  double iou = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> frames;
  MetricRow mean;

  void add(MetricRow row);
  /// Fixed-column text table: frame, PSNR, SSIM, IoU, then the mean row.
  std::string table() const;
};

MetricRow compare(const ImageRGBA& a, const ImageRGBA& b, const std::string& name = {},
                  double iou_threshold = 0.5);

/// Pairs PNGs by file name across two directories.
MetricReport evaluate_directories(const std::filesystem::path& a, const std::filesystem::path& b,
                                  double iou_threshold = 0.5);

}  // namespace gtex
