#include "gtex/frames.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gtex {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

Mat4 read_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": transform_matrix must be 4x4", 0);
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) {
      throw ParseError(where + ": transform_matrix must be 4x4", 0);
    }
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  if (!m.allFinite()) throw ParseError(where + ": non-finite transform_matrix", 0);
  return m;
}

json write_matrix(const Mat4& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
  return rows;
}

double angle_x(const Camera& cam) { return 2.0 * std::atan(0.5 * cam.width / cam.fx); }

template <class T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"", 0);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": bad value for \"" + key + "\"", 0);
  }
}

}  // namespace

Mat4 nerf_to_world_to_camera(const Mat4& camera_to_world) {
  Mat4 c2w = camera_to_world;
  c2w.col(1) *= -1.0;
  c2w.col(2) *= -1.0;
  Mat3 r = c2w.topLeftCorner<3, 3>().transpose();
  return rigid_transform(r, -r * c2w.topRightCorner<3, 1>());
}

Mat4 world_to_camera_to_nerf(const Mat4& world_to_camera) {
  Mat3 r = world_to_camera.topLeftCorner<3, 3>().transpose();
  Mat4 c2w = rigid_transform(r, -r * world_to_camera.topRightCorner<3, 1>());
  c2w.col(1) *= -1.0;
  c2w.col(2) *= -1.0;
  return c2w;
}

FrameSet load_frame_set(const std::filesystem::path& json_path, const Vec3& background) {
  const std::string where = json_path.string();
  json doc = read_json(json_path);
  const double fov = required<double>(doc, "camera_angle_x", where);
  if (!doc.contains("frames") || !doc["frames"].is_array() || doc["frames"].empty()) {
    throw ParseError(where + ": \"frames\" must be a non-empty array", 0);
  }
  FrameSet set;
  for (const auto& f : doc["frames"]) {
    Frame frame;
    frame.file_path = required<std::string>(f, "file_path", where);
    std::filesystem::path image_path = json_path.parent_path() / frame.file_path;
    if (!image_path.has_extension()) image_path += ".png";
    ImageRGBA raw = read_png(image_path);
    if (!f.contains("transform_matrix")) throw ParseError(where + ": missing transform_matrix", 0);
    Mat4 w2c = nerf_to_world_to_camera(read_matrix(f["transform_matrix"], where));
    frame.camera = Camera::from_fov(raw.width, raw.height, fov, w2c);
    frame.image = composite_over(raw, background);
    set.frames.push_back(std::move(frame));
  }
  return set;
}

void write_frame_set(const FrameSet& frames, const std::filesystem::path& json_path,
                     const Vec3& background) {
  if (frames.frames.empty()) throw Error("no frames to write");
  const auto dir = json_path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  json doc;
  doc["camera_angle_x"] = angle_x(frames.frames.front().camera);
  doc["frames"] = json::array();
  for (std::size_t i = 0; i < frames.frames.size(); ++i) {
    const Frame& f = frames.frames[i];
    std::string name = f.file_path;
    if (name.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "frame_%04zu.png", i);
      name = buf;
    }
    ImageRGBA straight = f.image;
    for (std::size_t p = 0; p < straight.pixel_count(); ++p) {
      double a = straight.data[p * 4 + 3];
      for (int c = 0; c < 3; ++c) {
        double& v = straight.data[p * 4 + c];
        v = a > 0.0 ? (v - (1.0 - a) * background[c]) / a : 0.0;
      }
    }
    std::filesystem::path image_path = dir / name;
    if (!image_path.has_extension()) image_path += ".png";
    write_png(straight, image_path);
    doc["frames"].push_back(
        {{"file_path", name}, {"transform_matrix", write_matrix(world_to_camera_to_nerf(f.camera.world_to_camera))}});
  }
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write " + json_path.string());
  out << doc.dump(2) << "\n";
}

Camera load_camera(const std::filesystem::path& json_path) {
  const std::string where = json_path.string();
  json doc = read_json(json_path);
  const double fov = required<double>(doc, "camera_angle_x", where);
  const int w = required<int>(doc, "width", where);
  const int h = required<int>(doc, "height", where);
  if (!doc.contains("transform_matrix")) throw ParseError(where + ": missing transform_matrix", 0);
  Camera cam = Camera::from_fov(w, h, fov, nerf_to_world_to_camera(read_matrix(doc["transform_matrix"], where)));
  cam.validate();
  return cam;
}

void write_camera(const Camera& cam, const std::filesystem::path& json_path) {
  json doc;
  doc["camera_angle_x"] = angle_x(cam);
  doc["width"] = cam.width;
  doc["height"] = cam.height;
  doc["transform_matrix"] = write_matrix(world_to_camera_to_nerf(cam.world_to_camera));
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write " + json_path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace gtex
