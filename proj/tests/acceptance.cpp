// Acceptance suite: one [PASS]/[FAIL] line per criterion, non-zero exit when
// any criterion fails.

#include "gtex/animation.hpp"
#include "gtex/diff.hpp"
#include "gtex/fixtures.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/metrics.hpp"
#include "gtex/renderer.hpp"
#include "gtex/shell_map.hpp"
#include "gtex/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace gtex;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean_psnr(const GaussianTexture& gt, const ProxyMesh& mesh, const FrameSet& frames,
                 const Vec3& bg) {
  auto world = world_gaussians(gt, mesh);
  double sum = 0.0;
  for (const auto& f : frames.frames) sum += psnr(render(world, f.camera, bg), f.image);
  return sum / static_cast<double>(frames.frames.size());
}

double rms_per_channel(const ImageRGBA& a, const ImageRGBA& b) {
  double worst = 0.0;
  for (int c = 0; c < 4; ++c) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
      double d = a.data[p * 4 + c] - b.data[p * 4 + c];
      s += d * d;
    }
    worst = std::max(worst, std::sqrt(s / static_cast<double>(a.pixel_count())));
  }
  return worst;
}

std::string png_bytes(const ImageRGBA& img, const std::filesystem::path& path) {
  write_png(img, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared sphere scene: icosphere proxy, reference texture, 20 views at 128x128.
struct SphereScene {
  ProxyMesh mesh;
  GaussianTexture reference;
  FrameSet frames;
  Vec3 background = Vec3::Zero();
};

SphereScene& sphere_scene() {
  static SphereScene s = [] {
    SphereScene out;
    out.mesh = fixtures::island_atlas(fixtures::icosphere(2));
    out.reference = fixtures::reference_texture(out.mesh, 7);
    out.frames = fixtures::render_frames(out.reference, out.mesh,
                                         fixtures::orbit_cameras(20, 3.0, 128, 0.9), out.background);
    return out;
  }();
  return s;
}

TrainConfig sphere_config() {
  TrainConfig cfg;
  cfg.iterations = 3000;
  cfg.log_interval = 500;
  return cfg;
}

struct TrainedSphere {
  GaussianTexture texture;
  double psnr = 0.0;
  double seconds = 0.0;
};

TrainedSphere& trained_sphere() {
  static TrainedSphere t = [] {
    auto& s = sphere_scene();
    TrainedSphere out;
    auto t0 = Clock::now();
    out.texture = train(s.frames, s.mesh, sphere_config()).texture;
    out.seconds = seconds_since(t0);
    out.psnr = mean_psnr(out.texture, s.mesh, s.frames, s.background);
    return out;
  }();
  return t;
}

Outcome gradient_correctness() {
  auto t0 = Clock::now();
  std::size_t checked = 0, passed = 0, excluded = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Scene scene = random_scene(seed, 50, 32);
    auto r = grad_check(scene, 1e-4, 1e-3);
    checked += r.checked;
    passed += r.passed;
    excluded += r.excluded;
    worst = std::min(worst, r.pass_fraction());
  }
  double secs = seconds_since(t0);
  double frac = checked ? double(passed) / double(checked) : 0.0;
  return {frac >= 0.99 && worst >= 0.99 && secs < 300.0,
          fmt("%zu/%zu coordinates within 1e-3 (%.4f overall, worst scene %.4f), %zu kink-excluded, %.1f s",
              passed, checked, frac, worst, excluded, secs)};
}

Outcome clamp_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst_min = 0.0, worst_sum = 0.0, worst_idem = 0.0;
  int n = 0;
  while (n < 100000) {
    double a = u(rng), b = u(rng);
    Vec3 phi(a, b, 1.0 - a - b);
    if (phi.minCoeff() >= 0.0) continue;
    ++n;
    Vec3 c = clamp_barycentric(phi);
    worst_min = std::max(worst_min, std::abs(c.minCoeff()));
    worst_sum = std::max(worst_sum, std::abs(c.sum() - 1.0));
    worst_idem = std::max(worst_idem, (clamp_barycentric(c) - c).cwiseAbs().maxCoeff());
  }
  double worst_identity = 0.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    double a = unit(rng), b = unit(rng) * (1.0 - a);
    Vec3 phi(a, b, 1.0 - a - b);
    Vec3 c = clamp_barycentric(phi);
    worst_identity = std::max(worst_identity, (c - phi).cwiseAbs().maxCoeff());
    worst_idem = std::max(worst_idem, (clamp_barycentric(c) - c).cwiseAbs().maxCoeff());
  }
  bool ok = worst_min < 1e-12 && worst_sum < 1e-12 && worst_identity == 0.0 && worst_idem < 1e-12;
  return {ok, fmt("|min| %.2e, |sum-1| %.2e, identity dev %.2e, idempotence dev %.2e", worst_min,
                  worst_sum, worst_identity, worst_idem)};
}

Outcome edge_continuity() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> h(-0.3, 0.3);
  std::vector<double> heights(7 * 7);
  for (auto& v : heights) v = h(rng);
  ProxyMesh mesh = fixtures::grid_mesh(6, 6, 2.0, heights);
  // Shared edges with both incident triangles.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> edges;
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) edges[std::minmax(tri[k], tri[(k + 1) % 3])].push_back(t);
  }
  std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, std::array<std::uint32_t, 2>>> shared;
  for (const auto& [e, tris] : edges) {
    if (tris.size() == 2) shared.push_back({e, {tris[0], tris[1]}});
  }
  std::uniform_int_distribution<std::size_t> pick(0, shared.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0), w(-0.2, 0.2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto& [e, tris] = shared[pick(rng)];
    double s = unit(rng), uw = w(rng);
    Vec3 pts[2];
    for (int side = 0; side < 2; ++side) {
      auto tri = ShellTriangle::from_mesh(mesh, tris[side]);
      const auto& idx = mesh.triangles[tris[side]];
      Vec3 phi = Vec3::Zero();
      for (int k = 0; k < 3; ++k) {
        if (idx[k] == e.first) phi[k] = 1.0 - s;
        if (idx[k] == e.second) phi[k] = s;
      }
      pts[side] = shell_eval_phi(tri, phi, uw).world;
    }
    worst = std::max(worst, (pts[0] - pts[1]).norm());
  }
  return {worst <= 1e-12, fmt("max disagreement %.2e over 1000 points on %zu shared edges", worst, shared.size())};
}

Outcome rigid_equivariance() {
  ProxyMesh mesh = fixtures::grid_mesh(1, 1, 2.0);
  auto reference = fixtures::reference_texture(mesh, 3);
  std::vector<Camera> cams;
  for (Vec3 eye : {Vec3(0.3, 0.2, 3.0), Vec3(-0.6, 0.1, 2.8), Vec3(0.2, -0.7, 2.9), Vec3(-0.3, -0.3, 3.2)}) {
    cams.push_back(Camera::from_fov(64, 64, 0.8, look_at(eye, Vec3::Zero(), Vec3::UnitY())));
  }
  auto frames = fixtures::render_frames(reference, mesh, cams, Vec3::Zero());
  TrainConfig cfg;
  cfg.iterations = 300;
  auto trained = train(frames, mesh, cfg).texture;

  Mat3 r = Eigen::AngleAxisd(1.1, Vec3(0.2, -0.5, 0.8).normalized()).toRotationMatrix();
  Vec3 t(0.7, -0.3, 1.9);
  std::vector<Vec3> moved;
  for (const auto& p : mesh.positions) moved.push_back(r * p + t);
  ProxyMesh moved_mesh = with_positions(mesh, moved);
  Mat4 motion_inv = rigid_transform(r, t).inverse();
  double worst = 0.0;
  for (const auto& cam : cams) {
    Camera counter = cam;
    counter.world_to_camera = cam.world_to_camera * motion_inv;
    auto a = render(world_gaussians(trained, mesh), cam, Vec3::Zero());
    auto b = render(world_gaussians(trained, moved_mesh), counter, Vec3::Zero());
    worst = std::max(worst, rms_per_channel(a, b));
  }
  return {worst <= 1e-5, fmt("worst per-channel RMS %.2e over %zu views", worst, cams.size())};
}

Outcome overfit() {
  auto& t = trained_sphere();
  auto& s = sphere_scene();
  return {t.psnr >= 30.0 && t.seconds < 600.0,
          fmt("mean PSNR %.2f dB over %zu views after %d iterations, %.1f s, %zu Gaussians", t.psnr,
              s.frames.frames.size(), sphere_config().iterations, t.seconds, t.texture.size())};
}

Outcome regularizer_effect() {
  auto& t = trained_sphere();
  auto& s = sphere_scene();
  const double eps = sphere_config().weights.epsilon_phi;
  double sum = 0.0, worst = 0.0;
  for (const auto& g : t.texture.gaussians) {
    ShellTriangle tri = ShellTriangle::from_mesh(s.mesh, g.tri_id);
    auto rec = project_gaussian(g, tri, 0);
    auto terms = regularizers(rec, tri, eps, 1.0, 1.0);
    sum += terms.barycentric;
    worst = std::max(worst, terms.max_deviation2);
  }
  double mean = t.texture.size() ? sum / double(t.texture.size()) : 0.0;
  return {mean <= 1e-4 && worst <= 10.0 * eps,
          fmt("mean L_phi %.3e, max deviation^2 %.3e (limit %.3e)", mean, worst, 10.0 * eps)};
}

Outcome animation_retention() {
  auto& t = trained_sphere();
  auto& s = sphere_scene();
  SineDeformer d;
  d.axis = Vec3::UnitY();
  d.direction = Vec3::UnitX();
  d.amplitude = 0.1;
  d.frequency = 0.5;
  d.phase_rate = 0.4;
  const int frames = 8;
  const auto& cam = s.frames.frames[0].camera;
  double static_psnr = psnr(render(world_gaussians(t.texture, s.mesh), cam, s.background),
                            render(world_gaussians(s.reference, s.mesh), cam, s.background));
  auto trained = render_animation(t.texture, s.mesh, d, cam, frames, s.background);
  auto reference = render_animation(s.reference, s.mesh, d, cam, frames, s.background);
  double worst_iou = 1.0, anim_psnr = 0.0;
  for (int f = 0; f < frames; ++f) {
    worst_iou = std::min(worst_iou, iou(trained[f], reference[f]));
    anim_psnr += psnr(trained[f], reference[f]) / frames;
  }
  return {worst_iou >= 0.95 && anim_psnr < static_psnr,
          fmt("min IoU %.4f over %d frames, animated PSNR %.2f dB vs static %.2f dB", worst_iou, frames,
              anim_psnr, static_psnr)};
}

Outcome proxy_robustness() {
  auto& t = trained_sphere();
  auto& s = sphere_scene();
  ProxyMesh coarse = fixtures::island_atlas(fixtures::decimate_sphere(fixtures::icosphere(2), 18));
  auto texture = train(s.frames, coarse, sphere_config()).texture;
  double coarse_psnr = mean_psnr(texture, coarse, s.frames, s.background);
  double drop = t.psnr - coarse_psnr;
  return {std::abs(drop) <= 2.0,
          fmt("full proxy %zu faces %.2f dB, decimated %zu faces %.2f dB, change %.2f dB",
              s.mesh.triangle_count(), t.psnr, coarse.triangle_count(), coarse_psnr, -drop)};
}

Outcome renderer_determinism() {
  Scene scene = random_scene(99, 50, 64);
  // A dense scene that spans many tiles.
  auto& s = sphere_scene();
  auto world = world_gaussians(s.reference, s.mesh);
  auto tmp = std::filesystem::temp_directory_path() / "gtex_acceptance_determinism.png";
  bool same = true;
  std::size_t checked = 0;
  for (const auto& cam : {s.frames.frames[0].camera, s.frames.frames[7].camera}) {
    std::string first;
    for (int threads : {1, 4, 16}) {
      RenderSettings rs;
      rs.threads = threads;
      std::string bytes = png_bytes(render(world, cam, s.background, rs), tmp);
      if (first.empty()) first = bytes;
      same &= bytes == first;
      ++checked;
    }
  }
  {
    std::string first;
    auto wg = world_gaussians(scene.texture, scene.mesh);
    for (int threads : {1, 4, 16}) {
      RenderSettings rs = scene.render;
      rs.threads = threads;
      std::string bytes = png_bytes(render(wg, scene.camera, scene.background, rs), tmp);
      if (first.empty()) first = bytes;
      same &= bytes == first;
      ++checked;
    }
  }
  std::filesystem::remove(tmp);
  return {same, fmt("%zu renders across 1/4/16 threads, PNGs %s", checked, same ? "identical" : "differ")};
}

Outcome transfer() {
  auto& t = trained_sphere();
  auto& s = sphere_scene();
  auto identity = rebind(t.texture, s.mesh);
  bool exact = identity.texture == t.texture && identity.dropped == 0;
  ProxyMesh remeshed = fixtures::subdivide_flat(s.mesh);
  auto moved = rebind(t.texture, remeshed);
  double source = mean_psnr(t.texture, s.mesh, s.frames, s.background);
  double target = mean_psnr(moved.texture, remeshed, s.frames, s.background);
  bool ok = exact && std::abs(source - target) <= 0.5;
  return {ok, fmt("identity rebind %s; re-meshed (%zu faces, %zu dropped) %.2f dB vs source %.2f dB",
                  exact ? "field-exact" : "NOT exact", remeshed.triangle_count(), moved.dropped, target,
                  source)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "barycentric clamp exactness", clamp_exactness},
      {3, "shell-map edge continuity", edge_continuity},
      {4, "rigid equivariance end-to-end", rigid_equivariance},
      {5, "overfit reproduction", overfit},
      {6, "regularizer effect", regularizer_effect},
      {7, "animation shape retention", animation_retention},
      {8, "proxy-resolution robustness", proxy_robustness},
      {9, "renderer determinism", renderer_determinism},
      {10, "texture transfer identity", transfer},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << o.detail
              << fmt(" (%.1f s)", seconds_since(t0)) << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures ? 1 : 0;
}
