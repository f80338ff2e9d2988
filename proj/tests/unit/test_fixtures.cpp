#include "doctest.h"
#include "support.hpp"

#include "gtex/shell_map.hpp"

#include <cmath>
#include <set>

using namespace gtex;

TEST_CASE("icosphere") {
  for (int level : {0, 1, 2}) {
    auto m = fixtures::icosphere(level, 2.0);
    std::size_t faces = 20;
    for (int i = 0; i < level; ++i) faces *= 4;
    CHECK(m.triangles.size() == faces);
    CHECK(m.positions.size() == faces / 2 + 2);
    for (const auto& p : m.positions) CHECK(p.norm() == doctest::Approx(2.0));
    for (const auto& t : m.triangles) {
      Vec3 n = (m.positions[t[1]] - m.positions[t[0]]).cross(m.positions[t[2]] - m.positions[t[0]]);
      CHECK(n.dot(m.positions[t[0]]) > 0.0);
    }
  }
}

TEST_CASE("sphere decimation") {
  auto full = fixtures::icosphere(2);
  auto coarse = fixtures::decimate_sphere(full, 18);
  CHECK(coarse.positions.size() == 18);
  CHECK(coarse.triangles.size() == 32);
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& t : coarse.triangles) {
    for (int k = 0; k < 3; ++k) edges.insert({t[k], t[(k + 1) % 3]});
    Vec3 n = (coarse.positions[t[1]] - coarse.positions[t[0]])
                 .cross(coarse.positions[t[2]] - coarse.positions[t[0]]);
    CHECK(n.dot(coarse.positions[t[0]]) > 0.0);
  }
  // Closed, consistently oriented: every directed edge has its reverse.
  for (const auto& [a, b] : edges) CHECK(edges.count({b, a}) == 1);
  for (const auto& p : coarse.positions) {
    bool found = false;
    for (const auto& q : full.positions) found |= (p - q).norm() == 0.0;
    CHECK(found);
  }
}

TEST_CASE("island atlas has uniform w-scalers") {
  auto mesh = fixtures::island_atlas(fixtures::icosphere(1));
  validate(mesh);
  const double w0 = mesh.omega_tri[0];
  for (double w : mesh.omega_tri) CHECK(w == doctest::Approx(w0).epsilon(1e-9));
  for (double w : mesh.omega_vert) CHECK(w == doctest::Approx(w0).epsilon(1e-9));
  for (const auto& uv : mesh.uvs) {
    for (const auto& p : uv) {
      CHECK(p.x() >= 0.0);
      CHECK(p.x() <= 1.0);
      CHECK(p.y() >= 0.0);
      CHECK(p.y() <= 1.0);
    }
  }
  // Islands do not overlap: each centroid is found in its own triangle.
  UvLocator loc(mesh);
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    Vec2 c = (mesh.uvs[t][0] + mesh.uvs[t][1] + mesh.uvs[t][2]) / 3.0;
    auto hit = loc.locate(c);
    REQUIRE(hit);
    CHECK(hit->tri_id == t);
  }
}

TEST_CASE("grid mesh") {
  auto m = fixtures::grid_mesh(3, 2, 2.0, {});
  CHECK(m.triangle_count() == 12);
  CHECK(m.vertex_count() == 12);
  for (const auto& p : m.positions) {
    CHECK(std::abs(p.x()) <= 1.0 + 1e-12);
    CHECK(p.z() == 0.0);
  }
  for (const auto& n : m.normals) CHECK((n - Vec3::UnitZ()).norm() < 1e-12);
  CHECK_THROWS_AS(fixtures::grid_mesh(0, 1, 1.0), Error);
}

TEST_CASE("flat subdivision keeps the surface") {
  auto mesh = fixtures::grid_mesh(2, 2, 1.0, {0, 0.1, 0.05, -0.1, 0.2, 0.1, 0, -0.05, 0.1});
  auto fine = fixtures::subdivide_flat(mesh);
  CHECK(fine.triangle_count() == 4 * mesh.triangle_count());
  std::mt19937_64 rng(1);
  UvLocator coarse_loc(mesh), fine_loc(fine);
  for (int i = 0; i < 300; ++i) {
    Vec2 uv(test::uniform(rng, 0.01, 0.99), test::uniform(rng, 0.01, 0.99));
    auto a = coarse_loc.locate(uv);
    auto b = fine_loc.locate(uv);
    REQUIRE(a);
    REQUIRE(b);
    Vec3 pa = barycentric_to_world({a->phi, 0.0, a->tri_id}, mesh);
    Vec3 pb = barycentric_to_world({b->phi, 0.0, b->tri_id}, fine);
    CHECK((pa - pb).norm() < 1e-12);
  }
}

TEST_CASE("orbit cameras look at the target") {
  auto cams = fixtures::orbit_cameras(12, 3.0, 32, 0.8, Vec3(0.1, 0, 0));
  REQUIRE(cams.size() == 12);
  for (const auto& c : cams) {
    CHECK((c.center() - Vec3(0.1, 0, 0)).norm() == doctest::Approx(3.0));
    Vec3 p = c.rotation() * Vec3(0.1, 0, 0) + c.translation();
    CHECK(p.head<2>().norm() < 1e-9);
    CHECK(p.z() == doctest::Approx(3.0));
  }
}

TEST_CASE("reference texture and frames") {
  auto mesh = fixtures::island_atlas(fixtures::icosphere(1));
  auto gt = fixtures::reference_texture(mesh);
  CHECK(gt.size() == 3 * mesh.triangle_count());
  CHECK(gt == fixtures::reference_texture(mesh));
  CHECK_FALSE(gt == fixtures::reference_texture(mesh, 8));
  for (const auto& g : gt.gaussians) {
    for (int c = 0; c < 3; ++c) {
      CHECK(g.color[c] >= 0.1 - 1e-12);
      CHECK(g.color[c] <= 0.9 + 1e-12);
    }
  }
  auto cams = fixtures::orbit_cameras(3, 4.0, 24, 0.8);
  auto frames = fixtures::render_frames(gt, mesh, cams, Vec3::Zero());
  REQUIRE(frames.frames.size() == 3);
  CHECK(frames.frames[1].file_path == "frame_0001.png");
  double coverage = 0.0;
  for (std::size_t p = 0; p < frames.frames[0].image.pixel_count(); ++p) {
    coverage += frames.frames[0].image.data[p * 4 + 3];
  }
  CHECK(coverage > 0.1 * 24 * 24);
}
