#pragma once

#include "gtex/gaussian_texture.hpp"
#include "gtex/image.hpp"
#include "gtex/mesh.hpp"
#include "gtex/projection.hpp"

namespace gtex {

struct LossWeights {
  double lambda_1 = 0.8;
  double lambda_phi = 1e5;
  double lambda_w = 1.0;
  double epsilon_phi = 0.01;
  bool mean_regularizers = false;  // divide the regularizer sum by the Gaussian count
};

struct PhotometricLoss {
  double l1 = 0.0;
  double dssim = 0.0;
  double value = 0.0;
};

/// lambda_1 * L1 + (1 - lambda_1) * (1 - SSIM) / 2 over RGB. When `grad` is
/// given it receives dLoss/dRGB of `rendered` (alpha channel zero).
PhotometricLoss photometric_loss(const ImageRGBA& rendered, const ImageRGBA& truth, double lambda_1,
                                 ImageRGBA* grad = nullptr);

/// Mean over the six bounding points of ReLU(world deviation^2 - epsilon).
double barycentric_reg(const TexGaussian& g, const ProxyMesh& mesh, double epsilon_phi = 0.01);

/// Sum of |phi_w| over the six bounding points.
double extrusion_reg(const TexGaussian& g, const ProxyMesh& mesh);

/// Both regularizers of one projected Gaussian with gradients w.r.t. the
/// bounding points' barycentric state, already multiplied by `weight_phi` and
/// `weight_w`.
struct RegularizerTerms {
  double barycentric = 0.0;
  double extrusion = 0.0;
  double max_deviation2 = 0.0;
  std::array<PointGrad, 6> grads{};
};

RegularizerTerms regularizers(const ProjectionRecord& rec, const ShellTriangle& tri,
                              double epsilon_phi, double weight_phi, double weight_w);

struct LossBreakdown {
  PhotometricLoss photometric;
  double barycentric_sum = 0.0;
  double extrusion_sum = 0.0;
  double total = 0.0;
};

LossBreakdown total_loss(const ImageRGBA& rendered, const ImageRGBA& truth,
                         const GaussianTexture& gt, const ProxyMesh& mesh, const LossWeights& w);

/// Combines precomputed terms exactly as total_loss does.
double combine_loss(const PhotometricLoss& photo, double barycentric_sum, double extrusion_sum,
                    std::size_t gaussian_count, const LossWeights& w);

}  // namespace gtex
