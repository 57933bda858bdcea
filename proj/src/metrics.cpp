#include "dynfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace dynfield {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kPsnrCap = 99.0;

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> kernel = [] {
    std::vector<double> k(kWin);
    double sum = 0;
    for (int i = 0; i < kWin; ++i) {
      double d = i - (kWin - 1) / 2.0;
      k[i] = std::exp(-d * d / (2 * kSigma * kSigma));
      sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

}  // namespace

size_t FocusMask::count() const {
  size_t n = 0;
  for (uint8_t v : mask) n += v != 0;
  return n;
}

FocusMask build_focus_mask(const std::vector<BBox>& boxes, double margin, int width, int height) {
  if (boxes.empty()) throw std::runtime_error("build_focus_mask: no boxes");
  if (margin < 1.0) throw std::runtime_error("build_focus_mask: margin must be >= 1");

  FocusMask m;
  m.width = width;
  m.height = height;
  m.mask.assign(size_t(width) * height, 0);
  for (const auto& b : boxes) {
    double cx = (b.x0 + b.x1) / 2.0, cy = (b.y0 + b.y1) / 2.0;
    double hw = (b.x1 - b.x0) / 2.0 * margin, hh = (b.y1 - b.y0) / 2.0 * margin;
    int x0 = std::max(0, int(std::floor(cx - hw)));
    int y0 = std::max(0, int(std::floor(cy - hh)));
    int x1 = std::min(width, int(std::ceil(cx + hw)));
    int y1 = std::min(height, int(std::ceil(cy + hh)));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) m.mask[size_t(y) * width + x] = 1;
  }
  return m;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, const FocusMask* mask) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error("psnr: image dimension mismatch");
  if (mask && (mask->width != a.width || mask->height != a.height))
    throw std::runtime_error("psnr: mask dimension mismatch");

  double sum = 0;
  size_t count = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (mask && !mask->at(x, y)) continue;
      const float* pa = a.pixel(x, y);
      const float* pb = b.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        double d = double(pa[c]) - double(pb[c]);
        sum += d * d;
      }
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("psnr: empty mask");
  double mse = sum / double(count * 3);
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

// Separable Gaussian filter of a single channel, valid region only.
// Output has size (w - kWin + 1) x (h - kWin + 1).
void gauss_filter(const std::vector<double>& img, int w, int h, std::vector<double>& out,
                  std::vector<double>& tmp) {
  const auto& k = gaussian_kernel();
  int ow = w - kWin + 1, oh = h - kWin + 1;
  tmp.assign(size_t(ow) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * img[size_t(y) * w + x + i];
      tmp[size_t(y) * ow + x] = acc;
    }
  out.assign(size_t(ow) * oh, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * tmp[size_t(y + i) * ow + x];
      out[size_t(y) * ow + x] = acc;
    }
}

}  // namespace

std::optional<double> ssim(const ImageBuffer& a, const ImageBuffer& b, const FocusMask* mask) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error("ssim: image dimension mismatch");
  if (a.width < kWin || a.height < kWin)
    throw std::runtime_error("ssim: image smaller than the 11x11 window");

  int w = a.width, h = a.height;
  int ow = w - kWin + 1, oh = h - kWin + 1;
  std::vector<double> xa(size_t(w) * h), xb(size_t(w) * h), xaa(size_t(w) * h), xbb(size_t(w) * h),
      xab(size_t(w) * h);
  std::vector<double> mu_a, mu_b, m_aa, m_bb, m_ab, tmp;

  double total = 0;
  size_t count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double va = a.pixel(x, y)[c];
        double vb = b.pixel(x, y)[c];
        size_t i = size_t(y) * w + x;
        xa[i] = va;
        xb[i] = vb;
        xaa[i] = va * va;
        xbb[i] = vb * vb;
        xab[i] = va * vb;
      }
    gauss_filter(xa, w, h, mu_a, tmp);
    gauss_filter(xb, w, h, mu_b, tmp);
    gauss_filter(xaa, w, h, m_aa, tmp);
    gauss_filter(xbb, w, h, m_bb, tmp);
    gauss_filter(xab, w, h, m_ab, tmp);

    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        // window center in image coordinates
        if (mask && !mask->at(x + kWin / 2, y + kWin / 2)) continue;
        size_t i = size_t(y) * ow + x;
        double ma = mu_a[i], mb = mu_b[i];
        double var_a = m_aa[i] - ma * ma;
        double var_b = m_bb[i] - mb * mb;
        double cov = m_ab[i] - ma * mb;
        double v = ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                   ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
        total += v;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return total / double(count);
}

MetricReport evaluate(const std::vector<EvalFrame>& frames, double margin) {
  if (frames.empty()) throw std::runtime_error("evaluate: no frames");

  // Keyed by (camera, time) so the aggregate is order-independent.
  std::map<std::pair<int, int>, const EvalFrame*> ordered;
  for (const auto& f : frames) {
    if (f.pred.width != f.gt.width || f.pred.height != f.gt.height)
      throw std::runtime_error("evaluate: pred/gt dimension mismatch");
    auto key = std::make_pair(f.camera_id, f.time_index);
    if (ordered.count(key)) throw std::runtime_error("evaluate: duplicate (camera, time) frame");
    ordered[key] = &f;
  }

  MetricReport report;
  report.margin = margin;
  double sum_psnr = 0, sum_ssim = 0, sum_psnr_f = 0, sum_ssim_f = 0;
  size_t n_focused = 0;
  for (const auto& [key, fp] : ordered) {
    const EvalFrame& f = *fp;
    FrameMetrics m;
    m.camera_id = f.camera_id;
    m.time_index = f.time_index;
    m.psnr = psnr(f.pred, f.gt);
    m.ssim = ssim(f.pred, f.gt).value();
    m.has_boxes = !f.boxes.empty();
    if (m.has_boxes) {
      FocusMask mask = build_focus_mask(f.boxes, margin, f.gt.width, f.gt.height);
      m.psnr_focused = psnr(f.pred, f.gt, &mask);
      m.ssim_focused = ssim(f.pred, f.gt, &mask);
      m.coverage = double(mask.count()) / double(mask.mask.size());
      sum_psnr_f += *m.psnr_focused;
      if (m.ssim_focused) sum_ssim_f += *m.ssim_focused;
      ++n_focused;
    }
    sum_psnr += m.psnr;
    sum_ssim += m.ssim;
    report.frames.push_back(m);
  }
  report.mean_psnr = sum_psnr / double(report.frames.size());
  report.mean_ssim = sum_ssim / double(report.frames.size());
  if (n_focused > 0) {
    report.mean_psnr_focused = sum_psnr_f / double(n_focused);
    report.mean_ssim_focused = sum_ssim_f / double(n_focused);
  }
  return report;
}

std::string report_to_json(const MetricReport& report) {
  json jframes = json::array();
  for (const auto& m : report.frames) {
    json jf{{"camera_id", m.camera_id}, {"time_index", m.time_index}, {"psnr", m.psnr},
            {"ssim", m.ssim}};
    jf["psnr_f"] = m.psnr_focused ? json(*m.psnr_focused) : json(nullptr);
    jf["ssim_f"] = m.ssim_focused ? json(*m.ssim_focused) : json(nullptr);
    jf["coverage"] = m.coverage ? json(*m.coverage) : json(nullptr);
    jframes.push_back(jf);
  }
  json doc{{"default", {{"psnr", report.mean_psnr}, {"ssim", report.mean_ssim}}},
           {"frames", jframes},
           {"margin", report.margin},
           {"lpips", nullptr}};  // reserved
  if (report.mean_psnr_focused)
    doc["focused"] = {{"psnr", *report.mean_psnr_focused}, {"ssim", *report.mean_ssim_focused}};
  else
    doc["focused"] = nullptr;
  return doc.dump(2);
}

void write_report(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << report_to_json(report) << "\n";
}

}  // namespace dynfield
