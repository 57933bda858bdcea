#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dynfield/vec.hpp"

namespace dynfield {

// Pinhole camera. Camera frame: looks along -Z, +Y up, +X right.
// c2w is a 4x4 row-major rigid transform (rotation block orthonormal, det +1).
struct CameraModel {
  int id = 0;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  std::array<double, 16> c2w{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  bool eval_only = false;

  Vec3d center() const { return {c2w[3], c2w[7], c2w[11]}; }
  Vec3d rotate(const Vec3d& v) const {
    return {c2w[0] * v.x + c2w[1] * v.y + c2w[2] * v.z,
            c2w[4] * v.x + c2w[5] * v.y + c2w[6] * v.z,
            c2w[8] * v.x + c2w[9] * v.y + c2w[10] * v.z};
  }
  // Rotation transpose = inverse for orthonormal blocks.
  Vec3d rotate_inv(const Vec3d& v) const {
    return {c2w[0] * v.x + c2w[4] * v.y + c2w[8] * v.z,
            c2w[1] * v.x + c2w[5] * v.y + c2w[9] * v.z,
            c2w[2] * v.x + c2w[6] * v.y + c2w[10] * v.z};
  }
  Vec3d world_to_cam(const Vec3d& p) const { return rotate_inv(p - center()); }

  // Throws std::runtime_error naming the problem if an invariant fails
  // (non-positive focal, principal point out of bounds, rotation block not
  // orthonormal with det +1 within 1e-6).
  void validate() const;
};

struct Ray {
  Vec3d origin;
  Vec3d direction;  // unit
  double near = 0.05;
  double far = 100.0;
  double time = 0.0;
  int camera_id = -1;
  double px = 0, py = 0;
};

// Uniform scale + translation: x' = scale*x + translation.
struct SceneTransform {
  double scale = 1.0;
  Vec3d translation{0, 0, 0};

  Vec3d apply(const Vec3d& p) const { return p * scale + translation; }
  Vec3d apply_inverse(const Vec3d& p) const { return (p - translation) / scale; }
};

// Ray through sub-pixel coordinate (px,py); direction is the normalized
// c2w-rotated ((px-cx)/fx, -(py-cy)/fy, -1).
Ray generate_ray(const CameraModel& cam, double px, double py, double time);

// Transform placing camera centers at centroid 0 with max norm 1.
// All cameras coincident -> scale 1.
SceneTransform normalize_scene(const std::vector<CameraModel>& cameras);

// Applies a similarity transform to a camera pose (translation scaled and
// shifted, rotation unchanged).
CameraModel transform_camera(const CameraModel& cam, const SceneTransform& t);

// c2w for a camera at `eye` aimed at `target` with world up (0,1,0).
std::array<double, 16> look_at(const Vec3d& eye, const Vec3d& target);

// Intrinsics from a horizontal field of view in degrees (square pixels,
// principal point at the image center).
void set_intrinsics_from_hfov(CameraModel& cam, double hfov_deg);

}  // namespace dynfield
