#include "dynfield/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynfield {

void CameraModel::validate() const {
  if (width <= 0 || height <= 0)
    throw std::runtime_error("camera " + std::to_string(id) + ": non-positive image size");
  if (fx <= 0 || fy <= 0)
    throw std::runtime_error("camera " + std::to_string(id) + ": focal lengths must be positive");
  if (cx < 0 || cx >= width || cy < 0 || cy >= height)
    throw std::runtime_error("camera " + std::to_string(id) + ": principal point outside image");

  // Orthonormality of the rotation block, det +1, tolerance 1e-6.
  const double* m = c2w.data();
  double r[3][3] = {{m[0], m[1], m[2]}, {m[4], m[5], m[6]}, {m[8], m[9], m[10]}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = r[0][i] * r[0][j] + r[1][i] * r[1][j] + r[2][i] * r[2][j];
      double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(dot - expect) > 1e-6)
        throw std::runtime_error("camera " + std::to_string(id) + ": rotation not orthonormal");
    }
  }
  double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
               r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
               r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  if (std::abs(det - 1.0) > 1e-6)
    throw std::runtime_error("camera " + std::to_string(id) + ": rotation determinant != +1");
  if (std::abs(m[12]) > 1e-12 || std::abs(m[13]) > 1e-12 || std::abs(m[14]) > 1e-12 ||
      std::abs(m[15] - 1.0) > 1e-12)
    throw std::runtime_error("camera " + std::to_string(id) + ": last c2w row must be (0,0,0,1)");
}

Ray generate_ray(const CameraModel& cam, double px, double py, double time) {
  Vec3d dir_cam{(px - cam.cx) / cam.fx, -(py - cam.cy) / cam.fy, -1.0};
  Ray ray;
  ray.origin = cam.center();
  ray.direction = cam.rotate(dir_cam).normalized();
  ray.time = time;
  ray.camera_id = cam.id;
  ray.px = px;
  ray.py = py;
  return ray;
}

SceneTransform normalize_scene(const std::vector<CameraModel>& cameras) {
  if (cameras.empty()) throw std::runtime_error("normalize_scene: no cameras");

  Vec3d centroid{0, 0, 0};
  for (const auto& c : cameras) centroid += c.center();
  centroid = centroid / double(cameras.size());

  double max_norm = 0;
  for (const auto& c : cameras) max_norm = std::max(max_norm, (c.center() - centroid).norm());

  SceneTransform t;
  t.scale = max_norm > 0 ? 1.0 / max_norm : 1.0;
  t.translation = -centroid * t.scale;
  return t;
}

CameraModel transform_camera(const CameraModel& cam, const SceneTransform& t) {
  CameraModel out = cam;
  Vec3d c = t.apply(cam.center());
  out.c2w[3] = c.x;
  out.c2w[7] = c.y;
  out.c2w[11] = c.z;
  return out;
}

std::array<double, 16> look_at(const Vec3d& eye, const Vec3d& target) {
  Vec3d fwd = (target - eye).normalized();
  Vec3d up{0, 1, 0};
  if (std::abs(fwd.dot(up)) > 0.999) up = {0, 0, 1};
  Vec3d right = fwd.cross(up).normalized();
  Vec3d cam_up = right.cross(fwd);
  // Columns are the camera axes in world coordinates: X=right, Y=up, Z=-forward.
  return {right.x, cam_up.x, -fwd.x, eye.x,
          right.y, cam_up.y, -fwd.y, eye.y,
          right.z, cam_up.z, -fwd.z, eye.z,
          0,       0,        0,      1};
}

void set_intrinsics_from_hfov(CameraModel& cam, double hfov_deg) {
  double half = hfov_deg * M_PI / 360.0;
  cam.fx = (cam.width / 2.0) / std::tan(half);
  cam.fy = cam.fx;
  cam.cx = cam.width / 2.0;
  cam.cy = cam.height / 2.0;
}

}  // namespace dynfield
