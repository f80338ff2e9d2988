#include "doctest.h"
#include "support.hpp"

#include "gtex/diff.hpp"

#include <cmath>
#include <limits>

using namespace gtex;

namespace {

bool bit_equal(const GradientRecord& a, const GradientRecord& b) {
  return a.values == b.values && a.screen_grad_norm == b.screen_grad_norm;
}

}  // namespace

TEST_CASE("scalar gradient check") {
  CHECK(scalar_grad_check([](double x) { return x * x; }, 6.0, 3.0) < 1e-8);
  double a = sigmoid(0.7);
  CHECK(scalar_grad_check(sigmoid, a * (1 - a), 0.7) < 1e-8);
  CHECK(scalar_grad_check([](double x) { return x * x; }, 7.0, 3.0) > 0.1);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.0, 1e-10) < 1e-3);
}

TEST_CASE("random scene gradients match finite differences") {
  // Without the L1 term the photometric loss has no per-pixel |.| kinks, so
  // every coordinate away from the regularizer kinks must agree.
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    Scene scene = random_scene(seed, 10, 24);
    scene.weights.lambda_1 = 0.0;
    auto report = grad_check(scene);
    INFO(report.text());
    CHECK(report.checked > 0);
    CHECK(report.passed == report.checked);
    for (const auto& [name, c] : report.classes) CHECK(c.median_rel < 1e-5);
  }
  Scene scene = random_scene(0, 10, 24);
  auto report = grad_check(scene);
  INFO(report.text());
  CHECK(report.pass_fraction() >= 0.99);
}

TEST_CASE("roll gradient at zero roll") {
  Scene scene = random_scene(2, 8, 24);
  for (auto& g : scene.texture.gaussians) g.theta_d = 0.0;
  auto analytic = evaluate_gradient(scene);
  for (std::size_t i = 0; i < scene.texture.size(); ++i) {
    if (near_kink(scene, i)) continue;
    Scene probe = scene;
    double& p = probe.texture.gaussians[i].theta_d;
    p = 1e-4;
    double lp = evaluate_loss(probe);
    p = -1e-4;
    double lm = evaluate_loss(probe);
    CHECK(relative_error(analytic.at(i, 6), (lp - lm) / 2e-4) < 1e-3);
  }
}

TEST_CASE("backward is linear in the loss scale") {
  Scene scene = random_scene(3, 20, 24);
  auto pass = forward(scene);
  auto base = backward(scene, pass);
  for (double s : {2.0, 0.5, 8.0}) {
    auto scaled = backward(scene, pass, s);
    for (std::size_t i = 0; i < base.values.size(); ++i) CHECK(scaled.values[i] == s * base.values[i]);
  }
}

TEST_CASE("photometric gradients add up") {
  Scene scene = random_scene(4, 20, 24);
  scene.weights.lambda_phi = 0.0;
  scene.weights.lambda_w = 0.0;
  auto grad_at = [&](double lambda_1) {
    Scene s = scene;
    s.weights.lambda_1 = lambda_1;
    return evaluate_gradient(s);
  };
  auto mixed = grad_at(0.5);
  auto l1 = grad_at(1.0);
  auto dssim = grad_at(0.0);
  double scale = 0.0;
  for (double v : mixed.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < mixed.values.size(); ++i) {
    CHECK(std::abs(mixed.values[i] - 0.5 * (l1.values[i] + dssim.values[i])) <= 1e-12 * scale);
  }
}

TEST_CASE("gradients are deterministic") {
  Scene scene = random_scene(5, 50, 32);
  scene.render.threads = 1;
  auto a = evaluate_gradient(scene);
  CHECK(bit_equal(a, evaluate_gradient(scene)));
  for (int threads : {4, 16}) {
    scene.render.threads = threads;
    CHECK(bit_equal(a, evaluate_gradient(scene)));
  }
}

TEST_CASE("non-finite parameters are reported by node") {
  Scene scene = random_scene(6, 10, 16);
  scene.texture.gaussians[3].log_s_d = std::numeric_limits<double>::quiet_NaN();
  try {
    evaluate_gradient(scene);
    FAIL("expected a non-finite error");
  } catch (const NonFiniteError& e) {
    CHECK(e.node() == "world Gaussian 3");
  }
}

TEST_CASE("kink detection") {
  Scene scene = random_scene(7, 5, 16);
  // Points on the atlas plane sit exactly on the |.| kink of the extrusion term.
  scene.texture.gaussians[0].u_r_lo.z() = 0.0;
  scene.texture.gaussians[0].u_r_hi.z() = 0.0;
  CHECK(near_kink(scene, 0));
  scene.texture.gaussians[0].u_r_lo.z() = 0.05;
  scene.texture.gaussians[0].u_r_hi.z() = 0.05;
  scene.texture.gaussians[0].theta_d = 0.3;
  CHECK_FALSE(near_kink(scene, 0));
}

TEST_CASE("regularizer weights scale their gradient share") {
  Scene scene = random_scene(8, 10, 16);
  Scene off = scene;
  off.weights.lambda_phi = 0.0;
  off.weights.lambda_w = 0.0;
  Scene doubled = scene;
  doubled.weights.lambda_w = 2.0 * scene.weights.lambda_w;
  auto g_off = evaluate_gradient(off);
  auto g_on = evaluate_gradient(scene);
  auto g_two = evaluate_gradient(doubled);
  // Only the extrusion term changes between the last two; its share doubles.
  for (std::size_t i = 0; i < g_off.values.size(); ++i) {
    double share = g_on.values[i] - g_off.values[i];
    double share2 = g_two.values[i] - g_off.values[i];
    CHECK(test::near(share2, 2.0 * share, 1e-9, 1e-12));
  }
}
