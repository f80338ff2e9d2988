#include "doctest.h"
#include "support.hpp"

#include "gtex/diff.hpp"
#include "gtex/losses.hpp"

#include <cmath>

using namespace gtex;

namespace {

ImageRGBA constant_image(int size, double v) {
  ImageRGBA img(size, size, v);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) img.data[p * 4 + 3] = 1.0;
  return img;
}

ImageRGBA noise_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImageRGBA img(size, size);
  for (auto& v : img.data) v = test::uniform(rng, 0, 1);
  return img;
}

// Distance from a 2D point to where the ray from the centroid leaves the unit
// triangle (0,0), (1,0), (0,1); zero when the point is inside.
double exit_distance(const Vec2& p) {
  if (p.x() >= 0 && p.y() >= 0 && p.x() + p.y() <= 1) return 0.0;
  const Vec2 c(1.0 / 3.0, 1.0 / 3.0);
  const Vec2 d = p - c;
  double s = 1.0;
  // Edges as n . x = k.
  const Vec2 normals[3] = {Vec2(0, 1), Vec2(1, 0), Vec2(1, 1)};
  const double offsets[3] = {0.0, 0.0, 1.0};
  for (int e = 0; e < 3; ++e) {
    double nd = normals[e].dot(d);
    if (nd == 0.0) continue;
    double t = (offsets[e] - normals[e].dot(c)) / nd;
    if (t > 0.0 && t < s) s = t;
  }
  return (1.0 - s) * d.norm();
}

double oracle_barycentric_reg(const TexGaussian& g, double eps) {
  auto bp = derive_bounding_points(g);
  double sum = 0.0;
  for (const auto& p : bp.points) {
    double d = exit_distance(Vec2(p.x(), p.y()));
    sum += std::max(0.0, d * d - eps);
  }
  return sum / 6.0;
}

TexGaussian edge_gaussian(double s_f) {
  TexGaussian g;
  g.u_r_lo = Vec3(0.25, 0.1, 0.0);
  g.u_r_hi = Vec3(0.35, 0.1, 0.0);
  g.log_s_d = std::log(0.02);
  g.log_s_f = std::log(s_f);
  return g;
}

}  // namespace

TEST_CASE("photometric loss values") {
  auto a = constant_image(16, 0.25);
  CHECK(photometric_loss(a, a, 0.8).value == 0.0);
  auto b = constant_image(16, 0.75);
  auto l = photometric_loss(a, b, 1.0);
  CHECK(l.l1 == doctest::Approx(0.5));
  CHECK(l.value == doctest::Approx(0.5));
  auto n = noise_image(16, 1);
  CHECK(std::abs(photometric_loss(n, n, 0.0).value) < 1e-12);
  auto m = noise_image(16, 2);
  auto mixed = photometric_loss(n, m, 0.3);
  CHECK(mixed.value == doctest::Approx(0.3 * mixed.l1 + 0.7 * mixed.dssim));
  CHECK_THROWS_AS(photometric_loss(n, constant_image(12, 0), 0.8), Error);
}

TEST_CASE("photometric gradient matches finite differences") {
  auto a = noise_image(14, 3);
  auto b = noise_image(14, 4);
  ImageRGBA grad;
  photometric_loss(a, b, 0.8, &grad);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    int x = static_cast<int>(rng() % 14), y = static_cast<int>(rng() % 14), c = static_cast<int>(rng() % 3);
    const double h = 1e-6;
    auto p = a, q = a;
    p.at(x, y, c) += h;
    q.at(x, y, c) -= h;
    double fd = (photometric_loss(p, b, 0.8).value - photometric_loss(q, b, 0.8).value) / (2 * h);
    CHECK(grad.at(x, y, c) == doctest::Approx(fd).epsilon(1e-5));
  }
  for (std::size_t p = 0; p < a.pixel_count(); ++p) CHECK(grad.data[p * 4 + 3] == 0.0);
}

TEST_CASE("barycentric regularizer on a Gaussian leaving its triangle") {
  auto mesh = test::unit_triangle();
  const double eps = 0.01;
  // Grow the forward scale until the outside point's squared deviation is 0.05.
  auto max_dev2 = [](double s_f) {
    auto bp = derive_bounding_points(edge_gaussian(s_f));
    double m = 0.0;
    for (const auto& p : bp.points) m = std::max(m, std::pow(exit_distance(Vec2(p.x(), p.y())), 2));
    return m;
  };
  double lo = 0.1, hi = 0.9;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (max_dev2(mid) < 0.05 ? lo : hi) = mid;
  }
  auto g = edge_gaussian(lo);
  CHECK(oracle_barycentric_reg(g, eps) == doctest::Approx((0.05 - 0.01) / 6.0).epsilon(1e-9));
  CHECK(barycentric_reg(g, mesh, eps) == doctest::Approx(0.04 / 6.0).epsilon(1e-9));

  // A deviation below epsilon costs nothing.
  lo = 0.1, hi = 0.9;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (max_dev2(mid) < 0.009 ? lo : hi) = mid;
  }
  CHECK(max_dev2(lo) > 0.0);
  CHECK(barycentric_reg(edge_gaussian(lo), mesh, eps) == 0.0);
  CHECK(barycentric_reg(edge_gaussian(0.05), mesh, eps) == 0.0);
}

TEST_CASE("barycentric regularizer agrees with the exit-distance oracle") {
  auto mesh = test::unit_triangle();
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    TexGaussian g;
    Vec3 c(test::uniform(rng, -0.2, 1.0), test::uniform(rng, -0.2, 1.0), 0.0);
    double half = test::uniform(rng, 0.01, 0.2);
    double ang = test::uniform(rng, 0, 2 * M_PI);
    Vec3 r(std::cos(ang) * half, std::sin(ang) * half, 0.0);
    g.u_r_lo = c - r;
    g.u_r_hi = c + r;
    g.theta_d = test::uniform(rng, -3, 3);
    g.log_s_d = std::log(test::uniform(rng, 0.01, 0.3));
    g.log_s_f = std::log(test::uniform(rng, 0.01, 0.3));
    // Off-plane points move with the normal, which is constant here, so the
    // deviation is the in-plane one.
    CHECK(test::near(barycentric_reg(g, mesh, 0.01), oracle_barycentric_reg(g, 0.01), 1e-9, 1e-15));
  }
}

TEST_CASE("extrusion regularizer sums absolute offsets") {
  auto mesh = test::unit_triangle();
  auto tri = ShellTriangle::from_mesh(mesh, 0);
  ProjectionRecord rec;
  const double w[6] = {0.1, -0.1, 0.05, -0.05, 0.05, 0.05};
  for (int k = 0; k < 6; ++k) {
    rec.samples[k] = shell_eval_phi(tri, Vec3::Constant(1.0 / 3.0), 0.0);
    rec.samples[k].phi_w = w[k];
  }
  auto terms = regularizers(rec, tri, 0.01, 1.0, 1.0);
  CHECK(terms.extrusion == doctest::Approx(0.4));
  CHECK(terms.barycentric == 0.0);
  CHECK(terms.grads[1].phi_w == -1.0);
  CHECK(terms.grads[0].phi_w == 1.0);
  for (auto& s : rec.samples) s.phi_w *= 2.0;
  CHECK(regularizers(rec, tri, 0.01, 1.0, 1.0).extrusion == doctest::Approx(0.8));
  CHECK(regularizers(rec, tri, 0.01, 1.0, 3.0).grads[1].phi_w == -3.0);
}

TEST_CASE("extrusion regularizer of a raised Gaussian") {
  // omega = 2 on the doubled triangle, so phi_w = 2 u_w for every point.
  auto mesh = test::unit_triangle(2.0);
  TexGaussian g;
  g.u_r_lo = Vec3(0.3, 0.3, 0.02);
  g.u_r_hi = Vec3(0.4, 0.3, 0.02);
  g.log_s_d = std::log(0.01);
  g.log_s_f = std::log(0.01);
  auto bp = derive_bounding_points(g);
  double expected = 0.0;
  for (const auto& p : bp.points) expected += std::abs(2.0 * p.z());
  CHECK(extrusion_reg(g, mesh) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("total loss combination") {
  PhotometricLoss photo;
  photo.value = 0.1;
  LossWeights w;
  CHECK(combine_loss(photo, 0.0, 0.01, 10, w) == doctest::Approx(0.11));
  CHECK(combine_loss(photo, 1e-7, 0.0, 10, w) == doctest::Approx(0.11));
  w.mean_regularizers = true;
  CHECK(combine_loss(photo, 0.0, 0.1, 10, w) == doctest::Approx(0.11));
  w.lambda_phi = 0.0;
  w.lambda_w = 0.0;
  CHECK(combine_loss(photo, 5.0, 5.0, 10, w) == 0.1);
}

TEST_CASE("zero regularizer weights reduce to the photometric loss") {
  Scene scene = random_scene(9, 20, 24);
  scene.weights.lambda_phi = 0.0;
  scene.weights.lambda_w = 0.0;
  auto pass = forward(scene);
  CHECK(pass.loss.total == pass.loss.photometric.value);
  auto full = total_loss(pass.render.image, scene.truth, scene.texture, scene.mesh, scene.weights);
  CHECK(full.total == doctest::Approx(pass.loss.total).epsilon(1e-12));
}

TEST_CASE("a perfect reconstruction has near-zero loss") {
  auto mesh = fixtures::grid_mesh(2, 2, 1.0);
  InitConfig init;
  init.opacity = 0.9;
  auto gt = init_gaussians(mesh, init);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt.gaussians[i].log_s_d = -60.0;
    gt.gaussians[i].color[i % 3] = 0.9;
  }
  Camera cam = Camera::from_fov(32, 32, 0.8, look_at(Vec3(0.1, -0.2, 2.0), Vec3::Zero(), Vec3::UnitY()));
  Scene scene;
  scene.mesh = mesh;
  scene.texture = gt;
  scene.camera = cam;
  scene.truth = render(world_gaussians(gt, mesh), cam, scene.background);
  auto pass = forward(scene);
  CHECK(pass.loss.photometric.value < 1e-12);
  INFO("barycentric " << pass.loss.barycentric_sum << " extrusion " << pass.loss.extrusion_sum);
  CHECK(pass.loss.total < 1e-12);
}
