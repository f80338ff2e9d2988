#include "gtex/training.hpp"

#include "gtex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gtex {

void TrainConfig::validate() const {
  if (!(weights.lambda_1 >= 0.0 && weights.lambda_1 <= 1.0)) throw Error("lambda_1 must lie in [0, 1]");
  if (!(weights.epsilon_phi >= 0.0)) throw Error("epsilon_phi must be non-negative");
  if (!(weights.lambda_phi >= 0.0) || !(weights.lambda_w >= 0.0)) {
    throw Error("regularizer weights must be non-negative");
  }
  for (double r : {lr.uv, lr.w, lr.theta, lr.log_scale, lr.opacity, lr.color}) {
    if (!(r > 0.0)) throw Error("learning rates must be positive");
  }
  if (!(lr.position_final_factor > 0.0)) throw Error("position decay factor must be positive");
  if (!(lr.beta1 >= 0.0 && lr.beta1 < 1.0) || !(lr.beta2 >= 0.0 && lr.beta2 < 1.0)) {
    throw Error("Adam betas must lie in [0, 1)");
  }
  if (iterations < 0) throw Error("iterations must be non-negative");
  if (densify_interval <= 0) throw Error("densify interval must be positive");
  if (log_interval <= 0) throw Error("log interval must be positive");
  if (!(prune_alpha >= 0.0 && prune_alpha < 1.0)) throw Error("prune threshold must lie in [0, 1)");
}

Adam::Adam(const LearningRates& lr, int params_per_gaussian)
    : lr_(lr), params_(params_per_gaussian) {}

void Adam::resize(std::size_t gaussians) {
  m_.resize(gaussians * params_, 0.0);
  v_.resize(gaussians * params_, 0.0);
}

void Adam::remap(const std::vector<std::int64_t>& origin) {
  std::vector<double> m(origin.size() * params_, 0.0);
  std::vector<double> v(origin.size() * params_, 0.0);
  for (std::size_t i = 0; i < origin.size(); ++i) {
    if (origin[i] < 0) continue;
    std::size_t src = static_cast<std::size_t>(origin[i]) * params_;
    std::copy_n(m_.begin() + src, params_, m.begin() + i * params_);
    std::copy_n(v_.begin() + src, params_, v.begin() + i * params_);
  }
  m_ = std::move(m);
  v_ = std::move(v);
}

void Adam::step(GaussianTexture& gt, const GradientRecord& grad, const ProxyMesh& mesh,
                double position_lr_factor) {
  if (grad.values.size() != gt.size() * params_ || m_.size() != grad.values.size()) {
    throw Error("optimizer state does not match the texture");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(lr_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(lr_.beta2, static_cast<double>(t_));
  std::vector<double> uv_scale(mesh.triangle_count());
  for (std::size_t t = 0; t < uv_scale.size(); ++t) uv_scale[t] = mean_uv_edge_length(mesh, t);

  for (std::size_t i = 0; i < gt.size(); ++i) {
    TexGaussian& g = gt.gaussians[i];
    for (int k = 0; k < params_; ++k) {
      double rate = 0.0;
      switch (param_class(k)) {
        case ParamClass::Uv: rate = lr_.uv * uv_scale[g.tri_id] * position_lr_factor; break;
        case ParamClass::W: rate = lr_.w * uv_scale[g.tri_id] * position_lr_factor; break;
        case ParamClass::Theta: rate = lr_.theta; break;
        case ParamClass::LogScale: rate = lr_.log_scale; break;
        case ParamClass::Opacity: rate = lr_.opacity; break;
        case ParamClass::Color: rate = lr_.color; break;
      }
      const std::size_t idx = i * params_ + k;
      const double gk = grad.values[idx];
      m_[idx] = lr_.beta1 * m_[idx] + (1.0 - lr_.beta1) * gk;
      v_[idx] = lr_.beta2 * v_[idx] + (1.0 - lr_.beta2) * gk * gk;
      g.param(k) -= rate * (m_[idx] / c1) / (std::sqrt(v_[idx] / c2) + lr_.eps);
    }
    if (gt.sh_degree == 0) {
      for (int c = 0; c < 3; ++c) g.color[c] = std::clamp(g.color[c], 0.0, 1.0);
    }
  }
}

double camera_extent(const FrameSet& frames) {
  if (frames.frames.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& f : frames.frames) mean += f.camera.center();
  mean /= static_cast<double>(frames.frames.size());
  double radius = 0.0;
  for (const auto& f : frames.frames) radius = std::max(radius, (f.camera.center() - mean).norm());
  return 1.1 * std::max(radius, 1e-6);
}

namespace {

void check_pass(const ForwardPass& pass, int iteration) {
  auto fail = [&](const std::string& term) {
    throw NonFiniteError("iteration " + std::to_string(iteration) + ": " + term);
  };
  if (!std::isfinite(pass.loss.photometric.l1)) fail("L1");
  if (!std::isfinite(pass.loss.photometric.dssim)) fail("D-SSIM");
  if (!std::isfinite(pass.loss.barycentric_sum)) fail("barycentric regularizer");
  if (!std::isfinite(pass.loss.extrusion_sum)) fail("extrusion regularizer");
  if (!std::isfinite(pass.loss.total)) fail("total loss");
}

}  // namespace

TrainResult train(const FrameSet& frames, const ProxyMesh& mesh, const TrainConfig& cfg,
                  std::optional<GaussianTexture> initial, const TrainCallback& callback) {
  cfg.validate();
  if (frames.frames.empty()) throw Error("training needs at least one posed frame");
  validate(mesh);
  for (const auto& f : frames.frames) {
    if (f.image.width != f.camera.width || f.image.height != f.camera.height) {
      throw Error("frame " + f.file_path + " does not match its camera size");
    }
  }

  Scene scene;
  scene.mesh = mesh;
  scene.texture = initial ? std::move(*initial) : init_gaussians(mesh, cfg.init);
  scene.background = cfg.background;
  scene.weights = cfg.weights;
  scene.render = cfg.render;
  for (const auto& g : scene.texture.gaussians) {
    if (g.tri_id >= mesh.triangle_count()) throw Error("Gaussian bound to a missing triangle");
  }

  TrainResult result;
  const int params = scene.texture.params_per_gaussian();
  Adam adam(cfg.lr, params);
  adam.resize(scene.texture.size());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(frames.frames.size());
  std::size_t cursor = order.size();
  std::vector<double> grad_sum(scene.texture.size(), 0.0);
  std::vector<double> grad_count(scene.texture.size(), 0.0);
  DensifyConfig densify_cfg = cfg.densify;
  densify_cfg.scene_extent = camera_extent(frames);

  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const Frame& frame = frames.frames[order[cursor++]];
    scene.camera = frame.camera;
    scene.truth = frame.image;

    ForwardPass pass;
    try {
      pass = forward(scene);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("iteration " + std::to_string(it) + ": " + e.node());
    }
    check_pass(pass, it);
    GradientRecord grad = backward(scene, pass);
    for (std::size_t i = 0; i < grad.values.size(); ++i) {
      if (!std::isfinite(grad.values[i])) {
        throw NonFiniteError("iteration " + std::to_string(it) + ": gradient of Gaussian " +
                             std::to_string(i / params));
      }
    }

    const double progress = cfg.iterations > 0 ? static_cast<double>(it) / cfg.iterations : 1.0;
    const double decay = std::pow(cfg.lr.position_final_factor, progress);
    adam.step(scene.texture, grad, mesh, decay);

    for (std::size_t i = 0; i < scene.texture.size(); ++i) {
      if (pass.render.screen[i].visible) {
        grad_sum[i] += grad.screen_grad_norm[i];
        grad_count[i] += 1.0;
      }
    }

    TrainLogEntry entry{it, pass.loss.total, psnr(pass.render.image, scene.truth),
                        scene.texture.size()};

    if (it >= cfg.densify_start && it < cfg.densify_stop && it % cfg.densify_interval == 0) {
      std::vector<double> mean_grad(scene.texture.size(), 0.0);
      for (std::size_t i = 0; i < mean_grad.size(); ++i) {
        if (grad_count[i] > 0.0) mean_grad[i] = grad_sum[i] / grad_count[i];
      }
      if (scene.texture.size() < cfg.max_gaussians) {
        DensifyResult d = densify(scene.texture, mesh, mean_grad, densify_cfg, rng);
        scene.texture = std::move(d.texture);
        adam.remap(d.origin);
      }
      std::vector<std::size_t> keep = prune_survivors(scene.texture, cfg.prune_alpha);
      if (keep.size() != scene.texture.size()) {
        std::vector<std::int64_t> origin(keep.begin(), keep.end());
        GaussianTexture pruned;
        pruned.sh_degree = scene.texture.sh_degree;
        pruned.mesh_fingerprint = scene.texture.mesh_fingerprint;
        for (auto k : keep) pruned.gaussians.push_back(scene.texture.gaussians[k]);
        scene.texture = std::move(pruned);
        adam.remap(origin);
      }
      grad_sum.assign(scene.texture.size(), 0.0);
      grad_count.assign(scene.texture.size(), 0.0);
    }

    if (it % cfg.log_interval == 0 || it == cfg.iterations) result.log.push_back(entry);
    if (callback && !callback(entry, scene.texture)) break;
  }
  result.texture = std::move(scene.texture);
  return result;
}

}  // namespace gtex
