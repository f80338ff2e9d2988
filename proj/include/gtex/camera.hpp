#pragma once

#include "gtex/common.hpp"

namespace gtex {

/// Pinhole camera. Camera space is x-right, y-down, z-forward; pixel centers
/// sit at integer coordinates.
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat4 world_to_camera = Mat4::Identity();
  double near = 0.01;
  double far = 1000.0;

  Mat3 rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  Vec3 center() const { return -rotation().transpose() * translation(); }

  void validate() const;

  /// Square-pixel camera with horizontal field of view `fov_x` (radians).
  static Camera from_fov(int width, int height, double fov_x, const Mat4& world_to_camera);
};

/// World-to-camera pose for an eye at `eye` looking at `target`, with image
/// "up" (negative camera y) roughly along `up`.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

/// Rigid transform x -> R x + t as a 4x4 matrix.
Mat4 rigid_transform(const Mat3& rotation, const Vec3& translation);

}  // namespace gtex
