#include "gtex/losses.hpp"

#include "gtex/metrics.hpp"

#include <cmath>

namespace gtex {

PhotometricLoss photometric_loss(const ImageRGBA& rendered, const ImageRGBA& truth, double lambda_1,
                                 ImageRGBA* grad) {
  if (!rendered.same_size(truth)) throw Error("rendered and ground-truth sizes differ");
  PhotometricLoss out;
  const std::size_t n = rendered.pixel_count() * 3;
  double sum = 0.0;
  for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) sum += std::abs(rendered.data[p * 4 + c] - truth.data[p * 4 + c]);
  }
  out.l1 = sum / static_cast<double>(n);
  ImageRGBA ssim_grad;
  double s = ssim(rendered, truth, grad ? &ssim_grad : nullptr);
  out.dssim = 0.5 * (1.0 - s);
  out.value = lambda_1 * out.l1 + (1.0 - lambda_1) * out.dssim;
  if (grad) {
    *grad = ImageRGBA(rendered.width, rendered.height);
    const double l1_scale = lambda_1 / static_cast<double>(n);
    const double ssim_scale = -0.5 * (1.0 - lambda_1);
    for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
      for (int c = 0; c < 3; ++c) {
        double d = rendered.data[p * 4 + c] - truth.data[p * 4 + c];
        double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        grad->data[p * 4 + c] = l1_scale * sign + ssim_scale * ssim_grad.data[p * 4 + c];
      }
    }
  }
  return out;
}

RegularizerTerms regularizers(const ProjectionRecord& rec, const ShellTriangle& tri,
                              double epsilon_phi, double weight_phi, double weight_w) {
  RegularizerTerms out;
  for (int k = 0; k < 6; ++k) {
    const ShellSample& s = rec.samples[k];
    BarycentricPenalty pen = barycentric_penalty(tri, s.phi, s.u_w, epsilon_phi);
    out.barycentric += pen.value / 6.0;
    out.max_deviation2 = std::max(out.max_deviation2, pen.deviation2);
    out.grads[k].phi += (weight_phi / 6.0) * pen.grad_phi;
    out.grads[k].u_w += (weight_phi / 6.0) * pen.grad_u_w;

    out.extrusion += std::abs(s.phi_w);
    double sign = s.phi_w > 0.0 ? 1.0 : (s.phi_w < 0.0 ? -1.0 : 0.0);
    out.grads[k].phi_w += weight_w * sign;
  }
  return out;
}

double barycentric_reg(const TexGaussian& g, const ProxyMesh& mesh, double epsilon_phi) {
  ShellTriangle tri = ShellTriangle::from_mesh(mesh, g.tri_id);
  return regularizers(project_gaussian(g, tri, 0), tri, epsilon_phi, 1.0, 1.0).barycentric;
}

double extrusion_reg(const TexGaussian& g, const ProxyMesh& mesh) {
  ShellTriangle tri = ShellTriangle::from_mesh(mesh, g.tri_id);
  return regularizers(project_gaussian(g, tri, 0), tri, 0.0, 1.0, 1.0).extrusion;
}

double combine_loss(const PhotometricLoss& photo, double barycentric_sum, double extrusion_sum,
                    std::size_t gaussian_count, const LossWeights& w) {
  double reg = w.lambda_phi * barycentric_sum + w.lambda_w * extrusion_sum;
  if (w.mean_regularizers && gaussian_count > 0) reg /= static_cast<double>(gaussian_count);
  return photo.value + reg;
}

LossBreakdown total_loss(const ImageRGBA& rendered, const ImageRGBA& truth,
                         const GaussianTexture& gt, const ProxyMesh& mesh, const LossWeights& w) {
  LossBreakdown out;
  out.photometric = photometric_loss(rendered, truth, w.lambda_1);
  for (const auto& g : gt.gaussians) {
    ShellTriangle tri = ShellTriangle::from_mesh(mesh, g.tri_id);
    RegularizerTerms r = regularizers(project_gaussian(g, tri, 0), tri, w.epsilon_phi, 1.0, 1.0);
    out.barycentric_sum += r.barycentric;
    out.extrusion_sum += r.extrusion;
  }
  out.total = combine_loss(out.photometric, out.barycentric_sum, out.extrusion_sum, gt.size(), w);
  return out;
}

}  // namespace gtex
