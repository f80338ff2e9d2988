#pragma once

#include "gtex/diff.hpp"
#include "gtex/frames.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/losses.hpp"
#include "gtex/mesh.hpp"
#include "gtex/renderer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace gtex {

struct LearningRates {
  double uv = 2e-4;     // multiplied by the triangle's mean UV edge length
  double w = 2e-4;      // same scaling as uv
  double theta = 1e-3;
  double log_scale = 5e-3;
  double opacity = 5e-2;
  double color = 2.5e-3;
  double position_final_factor = 0.01;  // exponential decay target for uv and w
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

struct TrainConfig {
  LossWeights weights;
  LearningRates lr;
  InitConfig init;
  DensifyConfig densify;
  RenderSettings render;
  Vec3 background = Vec3::Zero();
  int iterations = 3000;
  int densify_interval = 100;
  int densify_start = 500;
  int densify_stop = 15000;
  double prune_alpha = 0.005;
  std::size_t max_gaussians = 200000;
  int log_interval = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainLogEntry {
  int iteration = 0;
  double loss = 0.0;
  double psnr = 0.0;
  std::size_t gaussians = 0;

  bool operator==(const TrainLogEntry&) const = default;
};

struct TrainResult {
  GaussianTexture texture;
  std::vector<TrainLogEntry> log;
};

/// Adam with one learning rate per parameter class and per-Gaussian moments
/// that follow densification and pruning.
class Adam {
 public:
  Adam(const LearningRates& lr, int params_per_gaussian);

  void resize(std::size_t gaussians);
  /// Rebuilds the moment table: row i copies row `origin[i]`, or zero when -1.
  void remap(const std::vector<std::int64_t>& origin);
  void step(GaussianTexture& gt, const GradientRecord& grad, const ProxyMesh& mesh,
            double position_lr_factor);
  std::int64_t steps() const { return t_; }

 private:
  LearningRates lr_;
  int params_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Called after each iteration; returning false stops training early.
using TrainCallback = std::function<bool(const TrainLogEntry&, const GaussianTexture&)>;

/// Optimizes a texture against posed frames. Starts from `initial` when given,
/// otherwise from init_gaussians(mesh, cfg.init).
TrainResult train(const FrameSet& frames, const ProxyMesh& mesh, const TrainConfig& cfg,
                  std::optional<GaussianTexture> initial = std::nullopt,
                  const TrainCallback& callback = {});

/// Radius of the sphere around the camera centers' mean, times 1.1.
double camera_extent(const FrameSet& frames);

}  // namespace gtex
