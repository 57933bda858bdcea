#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dynfield/dataset.hpp"
#include "dynfield/synthgen.hpp"

namespace testutil {

// Unique scratch directory under the build tree, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dynfield_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

inline dynfield::CameraModel ring_camera(int id, int count, double radius, double height,
                                         int w = 32, int h = 24, double hfov = 50.0) {
  dynfield::CameraModel cam;
  cam.id = id;
  cam.width = w;
  cam.height = h;
  dynfield::set_intrinsics_from_hfov(cam, hfov);
  double a = 2 * M_PI * id / count;
  cam.c2w = dynfield::look_at({radius * std::cos(a), height, radius * std::sin(a)}, {0, 0, 0});
  return cam;
}

// In-memory dataset with random (already 8-bit-quantized) images.
inline dynfield::DynamicDataset random_dataset(int n_cams, int n_steps, int w, int h,
                                               uint32_t seed) {
  dynfield::DynamicDataset ds;
  ds.num_timesteps = n_steps;
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int c = 0; c < n_cams; ++c) ds.cameras.push_back(ring_camera(c, n_cams, 2.0, 0.7, w, h));
  auto t = dynfield::normalize_scene(ds.cameras);
  for (auto& cam : ds.cameras) cam = dynfield::transform_camera(cam, t);
  ds.scene_transform = t;
  for (int c = 0; c < n_cams; ++c) {
    for (int s = 0; s < n_steps; ++s) {
      dynfield::Frame f;
      f.camera_id = c;
      f.time_index = s;
      f.time = n_steps > 1 ? double(s) / (n_steps - 1) : 0.0;
      f.image = dynfield::ImageBuffer(w, h);
      for (auto& v : f.image.rgb) v = float(byte(rng)) / 255.0f;
      if (c == 0 && s == 0 && w >= 12 && h >= 10) f.boxes.push_back({2, 3, 10, 9});
      ds.frames.push_back(std::move(f));
    }
  }
  ds.validate();
  return ds;
}

// Small close-up scene + rig for fast training tests.
inline void write_training_dataset(const std::string& out, int cams = 4, int steps = 4,
                                   int w = 48, int h = 36, int workers = 2) {
  using namespace dynfield::synthgen;
  SceneSpec scene = single_player_scene();
  CameraRigSpec rig = default_rig(RigKind::Closeup);
  rig.count = cams;
  rig.eval_count = 1;
  rig.width = w;
  rig.height_px = h;
  rig.eval_width = w;
  rig.eval_height_px = h;
  export_dataset(scene, build_rig(rig), steps, out, workers);
}

}  // namespace testutil
