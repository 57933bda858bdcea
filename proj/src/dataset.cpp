#include "dynfield/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynfield {

namespace {

std::string cam_dir_name(int camera_id) {
  char buf[32];
  snprintf(buf, sizeof(buf), "cam%03d", camera_id);
  return buf;
}

std::string frame_file_name(int time_index, const char* ext) {
  char buf[32];
  snprintf(buf, sizeof(buf), "t%04d.%s", time_index, ext);
  return buf;
}

int64_t frame_key(int camera_id, int time_index) {
  return (int64_t(camera_id) << 32) | uint32_t(time_index);
}

}  // namespace

std::string frame_image_path(const std::string& root, int camera_id, int time_index) {
  return (fs::path(root) / "frames" / cam_dir_name(camera_id) / frame_file_name(time_index, "png"))
      .string();
}

std::string frame_depth_path(const std::string& root, int camera_id, int time_index) {
  return (fs::path(root) / "depth" / cam_dir_name(camera_id) / frame_file_name(time_index, "pfm"))
      .string();
}

void DynamicDataset::build_index() const {
  frame_index_.clear();
  camera_index_.clear();
  for (size_t i = 0; i < frames.size(); ++i)
    frame_index_[frame_key(frames[i].camera_id, frames[i].time_index)] = i;
  for (size_t i = 0; i < cameras.size(); ++i) camera_index_[cameras[i].id] = i;
}

const CameraModel* DynamicDataset::camera_by_id(int id) const {
  if (camera_index_.empty()) build_index();
  auto it = camera_index_.find(id);
  return it == camera_index_.end() ? nullptr : &cameras[it->second];
}

const Frame* DynamicDataset::frame_at(int camera_id, int time_index) const {
  if (frame_index_.empty()) build_index();
  auto it = frame_index_.find(frame_key(camera_id, time_index));
  return it == frame_index_.end() ? nullptr : &frames[it->second];
}

std::vector<int> DynamicDataset::training_camera_ids() const {
  std::vector<int> ids;
  for (const auto& c : cameras)
    if (!c.eval_only) ids.push_back(c.id);
  return ids;
}

std::vector<int> DynamicDataset::eval_camera_ids() const {
  std::vector<int> ids;
  for (const auto& c : cameras)
    if (c.eval_only) ids.push_back(c.id);
  return ids;
}

void DynamicDataset::validate() const {
  if (cameras.empty()) throw std::runtime_error("dataset has no cameras");
  if (num_timesteps < 1) throw std::runtime_error("num_timesteps must be >= 1");

  for (const auto& cam : cameras) cam.validate();

  std::vector<int64_t> keys;
  keys.reserve(frames.size());
  for (const auto& f : frames) {
    const CameraModel* cam = camera_by_id(f.camera_id);
    if (!cam)
      throw std::runtime_error("frame references unknown camera " + std::to_string(f.camera_id));
    if (f.image.width != cam->width || f.image.height != cam->height)
      throw std::runtime_error("frame image size mismatch for camera " +
                               std::to_string(f.camera_id));
    if (f.time_index < 0 || f.time_index >= num_timesteps)
      throw std::runtime_error("frame time index out of range for camera " +
                               std::to_string(f.camera_id));
    double expect = num_timesteps > 1 ? double(f.time_index) / (num_timesteps - 1) : 0.0;
    if (std::abs(f.time - expect) > 1e-12)
      throw std::runtime_error("frame time does not match its index");
    for (const auto& b : f.boxes) {
      if (!(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= cam->width && 0 <= b.y0 && b.y0 < b.y1 &&
            b.y1 <= cam->height))
        throw std::runtime_error("invalid bounding box on camera " + std::to_string(f.camera_id));
    }
    keys.push_back(frame_key(f.camera_id, f.time_index));
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    throw std::runtime_error("duplicate (camera, time) frame");

  for (const auto& cam : cameras) {
    if (cam.center().norm() > 1.0 + 1e-6)
      throw std::runtime_error("camera " + std::to_string(cam.id) +
                               " outside unit ball after normalization");
  }
}

DynamicDataset load_dataset(const std::string& path) {
  fs::path root(path);
  fs::path cams_path = root / "cameras.json";
  std::ifstream in(cams_path);
  if (!in) throw std::runtime_error("missing file: " + cams_path.string());

  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("unparseable JSON in " + cams_path.string() + ": " + e.what());
  }

  DynamicDataset ds;
  try {
    ds.num_timesteps = doc.at("num_timesteps").get<int>();
    for (const auto& jc : doc.at("cameras")) {
      CameraModel cam;
      cam.id = jc.at("id").get<int>();
      cam.width = jc.at("width").get<int>();
      cam.height = jc.at("height").get<int>();
      cam.fx = jc.at("fx").get<double>();
      cam.fy = jc.at("fy").get<double>();
      cam.cx = jc.at("cx").get<double>();
      cam.cy = jc.at("cy").get<double>();
      auto m = jc.at("c2w");
      if (!m.is_array() || m.size() != 16)
        throw std::runtime_error("camera " + std::to_string(cam.id) + ": c2w must have 16 entries");
      for (int i = 0; i < 16; ++i) cam.c2w[i] = m[i].get<double>();
      cam.eval_only = jc.value("eval", false);
      ds.cameras.push_back(cam);
    }
    if (doc.contains("background")) {
      auto bg = doc.at("background");
      ds.background = Vec3f{bg.at(0).get<float>(), bg.at(1).get<float>(), bg.at(2).get<float>()};
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("bad cameras.json schema in " + cams_path.string() + ": " + e.what());
  }
  if (ds.cameras.empty()) throw std::runtime_error("no cameras in " + cams_path.string());

  std::sort(ds.cameras.begin(), ds.cameras.end(),
            [](const CameraModel& a, const CameraModel& b) { return a.id < b.id; });
  for (const auto& cam : ds.cameras) cam.validate();

  ds.scene_transform = normalize_scene(ds.cameras);
  for (auto& cam : ds.cameras) cam = transform_camera(cam, ds.scene_transform);

  // Boxes, keyed by (camera, time).
  std::unordered_map<int64_t, std::vector<BBox>> boxes;
  fs::path boxes_path = root / "boxes.json";
  if (fs::exists(boxes_path)) {
    std::ifstream bin(boxes_path);
    json bdoc;
    try {
      bin >> bdoc;
      for (const auto& jb : bdoc.at("boxes")) {
        BBox b{jb.at("x0").get<int>(), jb.at("y0").get<int>(), jb.at("x1").get<int>(),
               jb.at("y1").get<int>()};
        boxes[frame_key(jb.at("camera_id").get<int>(), jb.at("time_index").get<int>())].push_back(
            b);
      }
    } catch (const json::exception& e) {
      throw std::runtime_error("bad boxes.json in " + boxes_path.string() + ": " + e.what());
    }
  }

  for (const auto& cam : ds.cameras) {
    for (int t = 0; t < ds.num_timesteps; ++t) {
      Frame f;
      f.camera_id = cam.id;
      f.time_index = t;
      f.time = ds.num_timesteps > 1 ? double(t) / (ds.num_timesteps - 1) : 0.0;
      std::string img_path = frame_image_path(path, cam.id, t);
      if (!fs::exists(img_path)) throw std::runtime_error("missing frame image: " + img_path);
      f.image = read_png_rgb8(img_path);

      std::string d_path = frame_depth_path(path, cam.id, t);
      if (fs::exists(d_path)) {
        DepthBuffer d = read_pfm(d_path);
        // Depth scales with the scene normalization.
        for (auto& v : d.depth) v = float(v * ds.scene_transform.scale);
        f.depth = std::move(d);
      }
      auto it = boxes.find(frame_key(cam.id, t));
      if (it != boxes.end()) f.boxes = it->second;
      ds.frames.push_back(std::move(f));
    }
  }

  ds.validate();
  return ds;
}

void save_dataset(const DynamicDataset& ds, const std::string& path) {
  fs::path root(path);
  fs::create_directories(root);

  json jcams = json::array();
  for (const auto& cam : ds.cameras) {
    json jc{{"id", cam.id},       {"width", cam.width}, {"height", cam.height}, {"fx", cam.fx},
            {"fy", cam.fy},       {"cx", cam.cx},       {"cy", cam.cy},
            {"c2w", cam.c2w}};
    if (cam.eval_only) jc["eval"] = true;
    jcams.push_back(jc);
  }
  json doc{{"num_timesteps", ds.num_timesteps}, {"cameras", jcams}};
  if (ds.background)
    doc["background"] = {ds.background->x, ds.background->y, ds.background->z};
  std::ofstream out(root / "cameras.json");
  if (!out) throw std::runtime_error("cannot write " + (root / "cameras.json").string());
  out << doc.dump(2) << "\n";

  json jboxes = json::array();
  for (const auto& f : ds.frames) {
    fs::create_directories(root / "frames" / cam_dir_name(f.camera_id));
    write_png_rgb8(frame_image_path(path, f.camera_id, f.time_index), f.image);
    if (f.depth) {
      fs::create_directories(root / "depth" / cam_dir_name(f.camera_id));
      write_pfm(frame_depth_path(path, f.camera_id, f.time_index), *f.depth);
    }
    for (const auto& b : f.boxes)
      jboxes.push_back(json{{"camera_id", f.camera_id},
                            {"time_index", f.time_index},
                            {"x0", b.x0},
                            {"y0", b.y0},
                            {"x1", b.x1},
                            {"y1", b.y1}});
  }
  if (!jboxes.empty()) {
    std::ofstream bout(root / "boxes.json");
    bout << json{{"boxes", jboxes}}.dump(2) << "\n";
  }
}

}  // namespace dynfield
