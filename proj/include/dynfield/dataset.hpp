#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynfield/camera.hpp"
#include "dynfield/image.hpp"

namespace dynfield {

// Half-open pixel rectangle: x in [x0,x1), y in [y0,y1).
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct Frame {
  int camera_id = 0;
  int time_index = 0;
  double time = 0.0;  // time_index / (T-1), 0 when T == 1
  ImageBuffer image;
  std::optional<DepthBuffer> depth;
  std::vector<BBox> boxes;
};

// Calibrated multi-camera sequence, normalized at load so camera centers sit
// inside the unit ball. Immutable after load; safe for shared reads.
struct DynamicDataset {
  std::vector<CameraModel> cameras;  // sorted by id, normalized poses
  std::vector<Frame> frames;
  int num_timesteps = 1;
  SceneTransform scene_transform;            // applied at load
  std::optional<Vec3f> background;           // generator sky color, if recorded

  const CameraModel* camera_by_id(int id) const;
  const Frame* frame_at(int camera_id, int time_index) const;

  std::vector<int> training_camera_ids() const;
  std::vector<int> eval_camera_ids() const;

  void validate() const;

 private:
  mutable std::unordered_map<int64_t, size_t> frame_index_;
  mutable std::unordered_map<int, size_t> camera_index_;
  void build_index() const;
  friend DynamicDataset load_dataset(const std::string&);
};

// Directory layout:
//   cameras.json
//   frames/cam{C:03}/t{F:04}.png         8-bit RGB
//   depth/cam{C:03}/t{F:04}.pfm          optional, little-endian grayscale PFM
//   boxes.json                           optional
DynamicDataset load_dataset(const std::string& path);

// Writes the same layout from an in-memory dataset (values as stored, i.e.
// normalized units). load_dataset(save_dataset(ds)) reproduces ds: poses to
// 1e-9 and pixels exactly, since 8-bit quantization is idempotent.
void save_dataset(const DynamicDataset& ds, const std::string& path);

std::string frame_image_path(const std::string& root, int camera_id, int time_index);
std::string frame_depth_path(const std::string& root, int camera_id, int time_index);

}  // namespace dynfield
