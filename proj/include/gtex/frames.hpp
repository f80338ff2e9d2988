#pragma once

#include "gtex/camera.hpp"
#include "gtex/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gtex {

struct Frame {
  std::string file_path;
  Camera camera;
  ImageRGBA image;  // composited over the background
};

struct FrameSet {
  std::vector<Frame> frames;
};

/// Converts a NeRF-style camera-to-world matrix (x-right, y-up, z-back) into a
/// world-to-camera pose in the x-right, y-down, z-forward convention.
Mat4 nerf_to_world_to_camera(const Mat4& camera_to_world);
Mat4 world_to_camera_to_nerf(const Mat4& world_to_camera);

/// Loads a transforms JSON ("camera_angle_x", "frames": [{"file_path",
/// "transform_matrix"}]). File paths are resolved relative to the JSON; a
/// missing extension defaults to ".png". Images are composited over
/// `background`.
FrameSet load_frame_set(const std::filesystem::path& json_path, const Vec3& background);

/// Writes `frames` as transforms JSON plus one straight-alpha PNG per frame
/// next to it, undoing the composite over `background`.
void write_frame_set(const FrameSet& frames, const std::filesystem::path& json_path,
                     const Vec3& background);

/// Single camera: {"camera_angle_x", "width", "height", "transform_matrix"}.
Camera load_camera(const std::filesystem::path& json_path);
void write_camera(const Camera& cam, const std::filesystem::path& json_path);

}  // namespace gtex
