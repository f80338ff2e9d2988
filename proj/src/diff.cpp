#include "gtex/diff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace gtex {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

void check_finite(double v, const std::string& node) {
  if (!std::isfinite(v)) throw NonFiniteError(node);
}

double regularizer_scale(const Scene& scene) {
  const auto& w = scene.weights;
  if (w.mean_regularizers && !scene.texture.gaussians.empty()) {
    return 1.0 / static_cast<double>(scene.texture.size());
  }
  return 1.0;
}

}  // namespace

std::vector<ShellTriangle> shell_triangles(const ProxyMesh& mesh) {
  std::vector<ShellTriangle> out;
  out.reserve(mesh.triangle_count());
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    out.push_back(ShellTriangle::from_mesh(mesh, t));
  }
  return out;
}

ForwardPass forward(const Scene& scene) {
  ForwardPass pass;
  const auto& gt = scene.texture;
  const auto& w = scene.weights;
  pass.triangles = shell_triangles(scene.mesh);
  pass.records.reserve(gt.size());
  pass.world.reserve(gt.size());
  pass.regularizers.reserve(gt.size());
  const double rs = regularizer_scale(scene);
  for (const auto& g : gt.gaussians) {
    if (g.tri_id >= pass.triangles.size()) throw Error("Gaussian bound to a missing triangle");
    const ShellTriangle& tri = pass.triangles[g.tri_id];
    pass.records.push_back(project_gaussian(g, tri, gt.sh_degree));
    const WorldGaussian& wg = pass.records.back().world;
    if (!finite(wg.mean) || !wg.cov.allFinite() || !std::isfinite(wg.alpha)) {
      throw NonFiniteError("world Gaussian " + std::to_string(pass.world.size()));
    }
    pass.world.push_back(wg);
    pass.regularizers.push_back(regularizers(pass.records.back(), tri, w.epsilon_phi,
                                             rs * w.lambda_phi, rs * w.lambda_w));
  }
  pass.render = rasterize(pass.world, scene.camera, scene.background, scene.render);
  pass.loss.photometric = photometric_loss(pass.render.image, scene.truth, w.lambda_1);
  for (const auto& r : pass.regularizers) {
    pass.loss.barycentric_sum += r.barycentric;
    pass.loss.extrusion_sum += r.extrusion;
  }
  pass.loss.total = combine_loss(pass.loss.photometric, pass.loss.barycentric_sum,
                                 pass.loss.extrusion_sum, gt.size(), w);
  return pass;
}

GradientRecord backward(const Scene& scene, const ForwardPass& pass, double scale) {
  const auto& gt = scene.texture;
  GradientRecord rec;
  rec.params_per_gaussian = gt.params_per_gaussian();
  rec.values.assign(gt.size() * rec.params_per_gaussian, 0.0);
  rec.screen_grad_norm.assign(gt.size(), 0.0);

  ImageRGBA grad_image;
  photometric_loss(pass.render.image, scene.truth, scene.weights.lambda_1, &grad_image);
  for (auto& v : grad_image.data) v *= scale;
  std::vector<WorldGaussianGrad> wgrads = render_backward(pass.render, pass.world, grad_image);

  const double half_w = 0.5 * scene.camera.width;
  const double half_h = 0.5 * scene.camera.height;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const TexGaussian& g = gt.gaussians[i];
    const WorldGaussianGrad& wg = wgrads[i];
    double* grad = &rec.values[i * rec.params_per_gaussian];
    std::array<PointGrad, 6> point_grads = pass.regularizers[i].grads;
    for (auto& pg : point_grads) {
      pg.phi *= scale;
      pg.phi_w *= scale;
      pg.u_w *= scale;
    }
    projection_backward(g, pass.triangles[g.tri_id], pass.records[i], wg.mean, wg.cov, point_grads,
                        grad);
    const double a = pass.world[i].alpha;
    grad[9] += wg.alpha * a * (1.0 - a);
    for (int k = 0; k < gt.color_values(); ++k) grad[kGeometryParams + k] += wg.color[k];
    rec.screen_grad_norm[i] = Vec2(wg.mean2d.x() * half_w, wg.mean2d.y() * half_h).norm();
  }
  return rec;
}

GradientRecord evaluate_gradient(const Scene& scene, LossBreakdown* loss) {
  ForwardPass pass = forward(scene);
  for (std::size_t p = 0; p < pass.render.image.data.size(); ++p) {
    check_finite(pass.render.image.data[p], "rendered image");
  }
  check_finite(pass.loss.photometric.l1, "L1");
  check_finite(pass.loss.photometric.dssim, "D-SSIM");
  check_finite(pass.loss.barycentric_sum, "barycentric regularizer");
  check_finite(pass.loss.extrusion_sum, "extrusion regularizer");
  GradientRecord rec = backward(scene, pass);
  for (std::size_t i = 0; i < rec.values.size(); ++i) {
    if (!std::isfinite(rec.values[i])) {
      throw NonFiniteError("gradient of Gaussian " + std::to_string(i / rec.params_per_gaussian) +
                           " parameter " + std::to_string(i % rec.params_per_gaussian));
    }
  }
  if (loss) *loss = pass.loss;
  return rec;
}

double evaluate_loss(const Scene& scene) { return forward(scene).loss.total; }

std::string GradCheckReport::text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %8s %8s %12s %12s\n", "class", "checked", "excluded",
                "passed", "max_rel", "median_rel");
  out += buf;
  for (const auto& [name, c] : classes) {
    std::snprintf(buf, sizeof(buf), "%-10s %8zu %8zu %8zu %12.3e %12.3e\n", name.c_str(), c.checked,
                  c.excluded, c.passed, c.max_rel, c.median_rel);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "total: %zu checked, %zu excluded, %zu passed (%.2f%%) at tol %.1e\n",
                checked, excluded, passed, 100.0 * pass_fraction(), tolerance);
  out += buf;
  return out;
}

bool near_kink(const Scene& scene, std::size_t gaussian, double band) {
  const TexGaussian& g = scene.texture.gaussians.at(gaussian);
  ShellTriangle tri = ShellTriangle::from_mesh(scene.mesh, g.tri_id);
  ProjectionRecord rec = project_gaussian(g, tri, scene.texture.sh_degree);
  for (const auto& s : rec.samples) {
    if (std::abs(s.phi_w) < band) return true;
    int k = argmin3(s.phi);
    double m = s.phi[k];
    if (std::abs(m) < band) return true;
    if (m < 0.0) {
      for (int i = 0; i < 3; ++i) {
        if (i != k && s.phi[i] - m < band) return true;
      }
      auto pen = barycentric_penalty(tri, s.phi, s.u_w, scene.weights.epsilon_phi);
      if (std::abs(pen.deviation2 - scene.weights.epsilon_phi) < band) return true;
    }
  }
  return false;
}

GradCheckReport grad_check(const Scene& scene, double h, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  GradientRecord analytic = evaluate_gradient(scene);
  std::map<std::string, std::vector<double>> errors;
  Scene probe = scene;
  const int params = scene.texture.params_per_gaussian();
  for (std::size_t i = 0; i < scene.texture.size(); ++i) {
    const bool kink = near_kink(scene, i);
    for (int k = 0; k < params; ++k) {
      const ParamClass cls = param_class(k);
      auto& c = report.classes[std::string(param_class_name(cls))];
      const bool geometric = cls != ParamClass::Opacity && cls != ParamClass::Color;
      if (kink && geometric) {
        ++c.excluded;
        ++report.excluded;
        continue;
      }
      double& p = probe.texture.gaussians[i].param(k);
      const double x = p;
      p = x + h;
      double lp = evaluate_loss(probe);
      p = x - h;
      double lm = evaluate_loss(probe);
      p = x;
      double fd = (lp - lm) / (2.0 * h);
      double err = relative_error(analytic.at(i, k), fd);
      ++c.checked;
      ++report.checked;
      if (err < tolerance) {
        ++c.passed;
        ++report.passed;
      }
      c.max_rel = std::max(c.max_rel, err);
      errors[std::string(param_class_name(cls))].push_back(err);
    }
  }
  for (auto& [name, list] : errors) {
    auto mid = list.begin() + static_cast<std::ptrdiff_t>(list.size() / 2);
    std::nth_element(list.begin(), mid, list.end());
    report.classes[name].median_rel = *mid;
  }
  return report;
}

Scene random_scene(std::uint64_t seed, int max_gaussians, int size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // 3x3 vertex grid over [-1, 1]^2 with random heights, atlas = (x + 1) / 2.
  std::vector<Vec3> positions;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      positions.emplace_back(x - 1.0, y - 1.0, uniform(-0.15, 0.15));
    }
  }
  std::vector<Triangle> triangles;
  std::vector<TriangleUv> uvs;
  auto uv_of = [&](std::uint32_t v) {
    return Vec2(0.5 * (positions[v].x() + 1.0), 0.5 * (positions[v].y() + 1.0));
  };
  for (std::uint32_t y = 0; y < 2; ++y) {
    for (std::uint32_t x = 0; x < 2; ++x) {
      std::uint32_t a = y * 3 + x, b = a + 1, c = a + 3, d = a + 4;
      for (Triangle t : {Triangle{a, b, d}, Triangle{a, d, c}}) {
        triangles.push_back(t);
        uvs.push_back({uv_of(t[0]), uv_of(t[1]), uv_of(t[2])});
      }
    }
  }

  Scene scene;
  scene.mesh = make_proxy_mesh(positions, triangles, uvs);
  scene.texture.sh_degree = static_cast<int>(seed % 2);
  scene.texture.mesh_fingerprint = mesh_fingerprint(scene.mesh);
  const int count = std::max(1, max_gaussians);
  for (int i = 0; i < count; ++i) {
    TexGaussian g;
    g.tri_id = static_cast<std::uint32_t>(rng() % scene.mesh.triangle_count());
    double b0 = uniform(0.15, 0.7), b1 = uniform(0.15, 0.85 - b0);
    Vec3 phi(b0, b1, 1.0 - b0 - b1);
    const auto& c = scene.mesh.uvs[g.tri_id];
    Vec2 anchor = phi[0] * c[0] + phi[1] * c[1] + phi[2] * c[2];
    double angle = uniform(0.0, 2.0 * std::numbers::pi);
    double half = uniform(0.03, 0.08);
    Vec2 dir(std::cos(angle), std::sin(angle));
    double w_sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    double w_center = w_sign * uniform(0.02, 0.06);
    double w_delta = uniform(-0.01, 0.01);
    g.u_r_lo = Vec3(anchor.x() - half * dir.x(), anchor.y() - half * dir.y(), w_center - w_delta);
    g.u_r_hi = Vec3(anchor.x() + half * dir.x(), anchor.y() + half * dir.y(), w_center + w_delta);
    g.theta_d = uniform(-std::numbers::pi, std::numbers::pi);
    g.log_s_d = std::log(uniform(0.02, 0.06));
    g.log_s_f = std::log(uniform(0.01, 0.03));
    g.opacity_logit = uniform(-1.0, 1.5);
    for (int k = 0; k < scene.texture.color_values(); ++k) {
      g.color[k] = k < 3 ? uniform(0.1, 0.9) : uniform(-0.2, 0.2);
    }
    scene.texture.gaussians.push_back(g);
  }

  const double fov = 50.0 * std::numbers::pi / 180.0;
  Vec3 eye(uniform(-0.4, 0.4), uniform(-0.4, 0.4), 2.4);
  scene.camera = Camera::from_fov(size, size, fov, look_at(eye, Vec3::Zero(), Vec3::UnitY()));
  scene.background = Vec3(uniform(0.0, 1.0), uniform(0.0, 1.0), uniform(0.0, 1.0));

  scene.truth = ImageRGBA(size, size);
  const double fx = uniform(0.1, 0.4), fy = uniform(0.1, 0.4), ph = uniform(0.0, 6.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        scene.truth.at(x, y, ch) = 0.5 + 0.4 * std::sin(fx * x + fy * y * (ch + 1) + ph + ch);
      }
      scene.truth.at(x, y, 3) = 1.0;
    }
  }

  // Cutoffs become negligible so the loss is smooth in every parameter.
  scene.render.threads = 1;
  scene.render.alpha_min = 1e-12;
  scene.render.transmittance_min = 1e-12;
  scene.render.sigma_extent = 8.0;
  return scene;
}

double scalar_grad_check(const std::function<double(double)>& f, double analytic, double x,
                         double h) {
  double fd = (f(x + h) - f(x - h)) / (2.0 * h);
  return relative_error(analytic, fd);
}

}  // namespace gtex
