#include "doctest.h"
#include "support.hpp"

#include "gtex/config.hpp"
#include "gtex/frames.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>

using namespace gtex;

namespace {

KeyValueConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in);
}

}  // namespace

TEST_CASE("NeRF camera conversion") {
  // NeRF camera at (0, 0, 5) looking down -z with y up: identity rotation.
  Mat4 c2w = Mat4::Identity();
  c2w(2, 3) = 5.0;
  Mat4 w2c = nerf_to_world_to_camera(c2w);
  // The origin lies straight ahead at depth 5.
  Eigen::Vector4d p = w2c * Eigen::Vector4d(0, 0, 0, 1);
  CHECK((p.head<3>() - Vec3(0, 0, 5)).norm() < 1e-12);
  // World +y is image up, i.e. negative camera y.
  Eigen::Vector4d up = w2c * Eigen::Vector4d(0, 1, 0, 0);
  CHECK((up.head<3>() - Vec3(0, -1, 0)).norm() < 1e-12);
  CHECK((world_to_camera_to_nerf(w2c) - c2w).norm() < 1e-12);

  Mat4 pose = look_at(Vec3(1, 2, 3), Vec3(0, 0.5, 0), Vec3::UnitY());
  CHECK((nerf_to_world_to_camera(world_to_camera_to_nerf(pose)) - pose).norm() < 1e-12);
}

TEST_CASE("frame set round trip") {
  test::TempDir dir;
  const Vec3 bg(0.2, 0.4, 0.6);
  FrameSet set;
  for (int i = 0; i < 2; ++i) {
    Frame f;
    f.camera = Camera::from_fov(6, 5, 0.7, look_at(Vec3(i, 1, 3), Vec3::Zero(), Vec3::UnitY()));
    ImageRGBA straight(6, 5);
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 6; ++x) {
        straight.at(x, y, 0) = x / 5.0;
        straight.at(x, y, 1) = y / 4.0;
        straight.at(x, y, 2) = 0.5;
        straight.at(x, y, 3) = (x + y) % 2 ? 1.0 : 0.6;
      }
    }
    f.image = composite_over(quantize8(straight), bg);
    set.frames.push_back(f);
  }
  write_frame_set(set, dir / "transforms.json", bg);
  auto loaded = load_frame_set(dir / "transforms.json", bg);
  REQUIRE(loaded.frames.size() == 2);
  for (int i = 0; i < 2; ++i) {
    const auto& a = set.frames[i];
    const auto& b = loaded.frames[i];
    CHECK(b.camera.width == 6);
    CHECK(b.camera.fx == doctest::Approx(a.camera.fx));
    CHECK((b.camera.world_to_camera - a.camera.world_to_camera).norm() < 1e-9);
    for (std::size_t k = 0; k < a.image.data.size(); ++k) {
      CHECK(test::near(b.image.data[k], a.image.data[k], 0.0, 1.0 / 255.0));
    }
  }
  // PNGs hold straight alpha.
  auto raw = read_png(dir / loaded.frames[0].file_path);
  CHECK(raw.at(5, 0, 0) == doctest::Approx(1.0));
  CHECK(raw.at(0, 0, 3) == doctest::Approx(153.0 / 255.0));
}

TEST_CASE("frame set errors") {
  test::TempDir dir;
  CHECK_THROWS_AS(load_frame_set(dir / "missing.json", Vec3::Zero()), Error);
  test::write_text(dir / "bad.json", "{\"frames\": [");
  CHECK_THROWS_AS(load_frame_set(dir / "bad.json", Vec3::Zero()), ParseError);
  test::write_text(dir / "noangle.json", "{\"frames\": []}");
  CHECK_THROWS_AS(load_frame_set(dir / "noangle.json", Vec3::Zero()), ParseError);
  test::write_text(dir / "empty.json", "{\"camera_angle_x\": 0.5, \"frames\": []}");
  CHECK_THROWS_AS(load_frame_set(dir / "empty.json", Vec3::Zero()), ParseError);
  write_png(ImageRGBA(4, 4, 1.0), dir / "img.png");
  test::write_text(dir / "matrix.json",
                   "{\"camera_angle_x\": 0.5, \"frames\": [{\"file_path\": \"img\", "
                   "\"transform_matrix\": [[1,0,0],[0,1,0],[0,0,1]]}]}");
  CHECK_THROWS_AS(load_frame_set(dir / "matrix.json", Vec3::Zero()), ParseError);
}

TEST_CASE("camera JSON") {
  test::TempDir dir;
  Camera cam = Camera::from_fov(40, 30, 0.9, look_at(Vec3(2, -1, 3), Vec3::Zero(), Vec3::UnitZ()));
  write_camera(cam, dir / "cam.json");
  Camera back = load_camera(dir / "cam.json");
  CHECK(back.width == 40);
  CHECK(back.height == 30);
  CHECK(back.fx == doctest::Approx(cam.fx));
  CHECK(back.cx == doctest::Approx(cam.cx));
  CHECK((back.world_to_camera - cam.world_to_camera).norm() < 1e-12);
  auto doc = nlohmann::json::parse(test::read_text(dir / "cam.json"));
  CHECK(doc["camera_angle_x"].get<double>() == doctest::Approx(0.9));
  doc["width"] = 0;
  test::write_text(dir / "bad.json", doc.dump());
  CHECK_THROWS_AS(load_camera(dir / "bad.json"), Error);
}

TEST_CASE("key-value config parsing") {
  auto cfg = parse_config(
      "# comment\n"
      "iterations = 12\n"
      "lambda_1=0.5   # trailing\n"
      "\n"
      "background = 1, 0.5 ,0\n"
      "flag = yes\n"
      "name = hello world\n"
      "iterations = 13\n");
  int its = 0;
  double l1 = 0;
  Vec3 bg = Vec3::Zero();
  bool flag = false;
  std::string name;
  std::uint64_t seed = 7;
  cfg.read("iterations", its);
  cfg.read("lambda_1", l1);
  cfg.read("background", bg);
  cfg.read("flag", flag);
  cfg.read("seed", seed);
  CHECK(its == 13);
  CHECK(l1 == 0.5);
  CHECK(bg == Vec3(1, 0.5, 0));
  CHECK(flag);
  CHECK(seed == 7);
  CHECK(cfg.unused_keys() == std::vector<std::string>{"name"});
  cfg.read("name", name);
  CHECK(name == "hello world");
  CHECK(cfg.unused_keys().empty());

  cfg.set("lambda_1", "0.25");
  cfg.read("lambda_1", l1);
  CHECK(l1 == 0.25);
  CHECK(cfg.contains("flag"));
  CHECK_FALSE(cfg.get("missing"));
}

TEST_CASE("key-value config errors") {
  CHECK_THROWS_AS(parse_config("a = 1\nno equals sign\n"), ParseError);
  try {
    parse_config("a = 1\nb c = 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  auto cfg = parse_config("x = 1.5\nv = 1, 2\nb = maybe\ni = 3.5\n");
  int i = 0;
  Vec3 v;
  bool b = false;
  CHECK_THROWS_AS(cfg.read("i", i), ParseError);
  CHECK_THROWS_AS(cfg.read("v", v), ParseError);
  CHECK_THROWS_AS(cfg.read("b", b), ParseError);
  try {
    cfg.read("x", i);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/gtex.cfg"), Error);
}
