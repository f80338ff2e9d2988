#include "gtex/camera.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace gtex {

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw Error("camera image size must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera focal lengths must be positive");
  if (!(near > 0.0) || !(near < far)) throw Error("camera needs 0 < near < far");
  if (!world_to_camera.allFinite()) throw Error("camera pose is not finite");
}

Camera Camera::from_fov(int width, int height, double fov_x, const Mat4& world_to_camera) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = 0.5 * width / std::tan(0.5 * fov_x);
  cam.fy = cam.fx;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.world_to_camera = world_to_camera;
  return cam;
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  Vec3 z = (target - eye).normalized();
  Vec3 y = -(up - up.dot(z) * z);
  if (y.norm() < 1e-12) {
    Vec3 alt = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    y = -(alt - alt.dot(z) * z);
  }
  y.normalize();
  Vec3 x = y.cross(z);
  Mat3 r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return rigid_transform(r, -r * eye);
}

Mat4 rigid_transform(const Mat3& rotation, const Vec3& translation) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

}  // namespace gtex
