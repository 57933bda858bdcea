#include "dynfield/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynfield {

MedianImageSet compute_median_images(const DynamicDataset& ds) {
  MedianImageSet set;
  for (const auto& cam : ds.cameras) {
    std::vector<const ImageBuffer*> images;
    for (const auto& f : ds.frames)
      if (f.camera_id == cam.id) images.push_back(&f.image);
    if (images.empty()) throw std::runtime_error("camera has no frames: " + std::to_string(cam.id));

    ImageBuffer median(cam.width, cam.height);
    size_t n = images[0]->rgb.size();
    std::vector<float> vals(images.size());
    for (size_t i = 0; i < n; ++i) {
      for (size_t t = 0; t < images.size(); ++t) vals[t] = images[t]->rgb[i];
      size_t k = (vals.size() - 1) / 2;  // lower median
      std::nth_element(vals.begin(), vals.begin() + k, vals.end());
      median.rgb[i] = vals[k];
    }
    set.by_camera.emplace(cam.id, std::move(median));
  }
  return set;
}

std::vector<float> isg_weights(const ImageBuffer& frame, const ImageBuffer& median, float gamma,
                               float floor_eps) {
  if (frame.width != median.width || frame.height != median.height)
    throw std::runtime_error("isg_weights: frame/median dimension mismatch");
  if (!(gamma > 0)) throw std::runtime_error("isg_weights: gamma must be positive");

  float g2 = gamma * gamma;
  std::vector<float> weights(frame.num_pixels());
  for (size_t p = 0; p < weights.size(); ++p) {
    float w = 0;
    for (int c = 0; c < 3; ++c) {
      float r = frame.rgb[p * 3 + c] - median.rgb[p * 3 + c];
      float r2 = r * r;
      w += r2 / (r2 + g2);
    }
    weights[p] = std::max(w / 3.0f, floor_eps);
  }
  return weights;
}

namespace {

PixelWeightTable::FrameEntry make_entry(const Frame& f, const std::vector<float>& weights) {
  PixelWeightTable::FrameEntry e;
  e.camera_id = f.camera_id;
  e.time_index = f.time_index;
  e.width = f.image.width;
  e.height = f.image.height;
  e.cdf.resize(weights.size());
  double acc = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    e.cdf[i] = float(acc);
  }
  return e;
}

}  // namespace

PixelWeightTable PixelWeightTable::uniform(const DynamicDataset& ds) {
  PixelWeightTable table;
  for (const auto& f : ds.frames) {
    const CameraModel* cam = ds.camera_by_id(f.camera_id);
    if (cam->eval_only) continue;
    std::vector<float> w(f.image.num_pixels(), 1.0f);
    table.frames_.push_back(make_entry(f, w));
  }
  if (table.frames_.empty()) throw std::runtime_error("no training frames");
  return table;
}

PixelWeightTable PixelWeightTable::isg(const DynamicDataset& ds, const MedianImageSet& medians,
                                       float gamma, float floor_eps) {
  PixelWeightTable table;
  for (const auto& f : ds.frames) {
    const CameraModel* cam = ds.camera_by_id(f.camera_id);
    if (cam->eval_only) continue;
    const ImageBuffer& median = medians.by_camera.at(f.camera_id);
    table.frames_.push_back(make_entry(f, isg_weights(f.image, median, gamma, floor_eps)));
  }
  if (table.frames_.empty()) throw std::runtime_error("no training frames");
  return table;
}

std::vector<PixelSample> PixelWeightTable::sample_pixels(int batch_size, Rng64& rng) const {
  std::vector<PixelSample> out;
  out.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const FrameEntry& e = frames_[rng.next_below(uint32_t(frames_.size()))];
    float total = e.cdf.back();
    float u = float(rng.next_double()) * total;
    size_t idx = std::lower_bound(e.cdf.begin(), e.cdf.end(), u) - e.cdf.begin();
    if (idx >= e.cdf.size()) idx = e.cdf.size() - 1;
    out.push_back({e.camera_id, e.time_index, int(idx % e.width), int(idx / e.width)});
  }
  return out;
}

double PixelWeightTable::pixel_probability(size_t frame_index, size_t pixel_index) const {
  const FrameEntry& e = frames_.at(frame_index);
  double w = e.cdf[pixel_index] - (pixel_index > 0 ? e.cdf[pixel_index - 1] : 0.0f);
  return w / e.cdf.back();
}

}  // namespace dynfield
