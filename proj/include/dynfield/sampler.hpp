#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynfield/dataset.hpp"
#include "dynfield/vec.hpp"

namespace dynfield {

// Per-camera per-pixel per-channel temporal median over all timesteps
// (lower median for even counts).
struct MedianImageSet {
  std::unordered_map<int, ImageBuffer> by_camera;
};

MedianImageSet compute_median_images(const DynamicDataset& ds);

// Per pixel: w = (1/3) sum_c r_c^2 / (r_c^2 + gamma^2) with r = frame - median,
// floored at `floor_eps`.
std::vector<float> isg_weights(const ImageBuffer& frame, const ImageBuffer& median, float gamma,
                               float floor_eps = 1e-3f);

struct PixelSample {
  int camera_id;
  int time_index;
  int px;
  int py;
};

// Sampling weights per training frame. Frames are drawn uniformly, pixels
// within a frame proportionally to their weight via a per-frame CDF
// (O(log N) per draw). Immutable once built.
class PixelWeightTable {
 public:
  struct FrameEntry {
    int camera_id;
    int time_index;
    int width;
    int height;
    std::vector<float> cdf;  // inclusive prefix sums of the weight map
  };

  // Uniform table over the training frames of `ds`.
  static PixelWeightTable uniform(const DynamicDataset& ds);
  // ISG table from the temporal median images.
  static PixelWeightTable isg(const DynamicDataset& ds, const MedianImageSet& medians, float gamma,
                              float floor_eps = 1e-3f);

  // Draws with replacement; deterministic for a fixed rng state.
  std::vector<PixelSample> sample_pixels(int batch_size, Rng64& rng) const;

  // Probability of drawing `pixel_index` conditional on its frame being chosen.
  double pixel_probability(size_t frame_index, size_t pixel_index) const;

  size_t num_frames() const { return frames_.size(); }
  const FrameEntry& frame(size_t i) const { return frames_[i]; }

 private:
  std::vector<FrameEntry> frames_;
};

}  // namespace dynfield
