#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynfield/dataset.hpp"
#include "dynfield/image.hpp"

namespace dynfield {

// Binary per-pixel mask, union of margin-expanded boxes clamped to bounds.
struct FocusMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> mask;

  bool at(int x, int y) const { return mask[size_t(y) * width + x] != 0; }
  size_t count() const;
};

// Each box expands about its center to margin x its size (floor for min,
// ceil for max), is clamped, and the union is taken. Empty box list -> error.
FocusMask build_focus_mask(const std::vector<BBox>& boxes, double margin, int width, int height);

// 10*log10(1/MSE) over masked pixels (peak 1.0); zero MSE capped at 99 dB.
double psnr(const ImageBuffer& a, const ImageBuffer& b, const FocusMask* mask = nullptr);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1 = 0.01^2, C2 = 0.03^2,
// channels averaged. Window centers must have a full window inside the image;
// the masked variant averages only centers inside the mask. Returns nullopt
// when the mask leaves no valid center.
std::optional<double> ssim(const ImageBuffer& a, const ImageBuffer& b,
                           const FocusMask* mask = nullptr);

struct FrameMetrics {
  int camera_id = 0;
  int time_index = 0;
  double psnr = 0;
  double ssim = 0;
  std::optional<double> psnr_focused;
  std::optional<double> ssim_focused;
  std::optional<double> coverage;  // mask pixel fraction
  bool has_boxes = false;
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0;
  double mean_ssim = 0;
  std::optional<double> mean_psnr_focused;  // over frames with boxes
  std::optional<double> mean_ssim_focused;
  double margin = 1.5;
};

struct EvalFrame {
  int camera_id = 0;
  int time_index = 0;
  ImageBuffer pred;
  ImageBuffer gt;
  std::vector<BBox> boxes;
};

// Per-frame default and focused metrics plus aggregates. Frames without boxes
// contribute only to the default aggregate and are flagged. Pred/gt pairs are
// matched by (camera, time); the aggregate is order-independent.
MetricReport evaluate(const std::vector<EvalFrame>& frames, double margin);

std::string report_to_json(const MetricReport& report);
void write_report(const MetricReport& report, const std::string& path);

}  // namespace dynfield
