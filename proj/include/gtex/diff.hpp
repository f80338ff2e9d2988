#pragma once

#include "gtex/camera.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/image.hpp"
#include "gtex/losses.hpp"
#include "gtex/mesh.hpp"
#include "gtex/projection.hpp"
#include "gtex/renderer.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace gtex {

/// Everything needed to evaluate the training loss for one view.
struct Scene {
  ProxyMesh mesh;
  GaussianTexture texture;
  Camera camera;
  ImageRGBA truth;
  Vec3 background = Vec3::Zero();
  LossWeights weights;
  RenderSettings render;
};

/// Per-Gaussian flat parameter gradients plus the densification statistic.
struct GradientRecord {
  int params_per_gaussian = 0;
  std::vector<double> values;
  std::vector<double> screen_grad_norm;  // |dL/dmean2d| in NDC units, per view

  double& at(std::size_t gaussian, int k) { return values[gaussian * params_per_gaussian + k]; }
  double at(std::size_t gaussian, int k) const {
    return values[gaussian * params_per_gaussian + k];
  }
  std::size_t size() const { return screen_grad_norm.size(); }
};

struct ForwardPass {
  std::vector<ShellTriangle> triangles;
  std::vector<ProjectionRecord> records;
  std::vector<WorldGaussian> world;
  std::vector<RegularizerTerms> regularizers;
  RenderState render;
  LossBreakdown loss;
};

std::vector<ShellTriangle> shell_triangles(const ProxyMesh& mesh);

ForwardPass forward(const Scene& scene);

/// Reverse pass of `forward`; gradients of `scale * total loss`.
GradientRecord backward(const Scene& scene, const ForwardPass& pass, double scale = 1.0);

/// forward + backward; throws NonFiniteError on NaN/Inf.
GradientRecord evaluate_gradient(const Scene& scene, LossBreakdown* loss = nullptr);

double evaluate_loss(const Scene& scene);

struct GradCheckClass {
  std::size_t checked = 0;
  std::size_t excluded = 0;
  std::size_t passed = 0;  // rel err < tolerance
  double max_rel = 0.0;
  double median_rel = 0.0;
};

struct GradCheckReport {
  std::map<std::string, GradCheckClass> classes;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  std::size_t passed = 0;
  double tolerance = 1e-3;

  double pass_fraction() const { return checked ? double(passed) / double(checked) : 1.0; }
  std::string text() const;
};

inline double relative_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

/// True when the Gaussian's regularizer state sits within `band` of a ReLU,
/// min or |.| kink, where one-sided derivatives disagree.
bool near_kink(const Scene& scene, std::size_t gaussian, double band = 1e-6);

/// Central differences against the analytic gradient for every coordinate.
GradCheckReport grad_check(const Scene& scene, double h = 1e-4, double tolerance = 1e-3);

/// Seeded random scene: small bumpy grid mesh, <= `max_gaussians` Gaussians,
/// square image of `size` pixels. Renderer cutoffs are relaxed so the image
/// is a smooth function of the parameters.
Scene random_scene(std::uint64_t seed, int max_gaussians = 50, int size = 32);

/// Central-difference check of a scalar function with a known derivative.
double scalar_grad_check(const std::function<double(double)>& f, double analytic, double x,
                         double h = 1e-4);

}  // namespace gtex
