#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dynfield/metrics.hpp"

using namespace dynfield;

namespace {

ImageBuffer gradient_image(int w, int h, uint32_t seed = 0) {
  ImageBuffer img(w, h);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> jit(0.f, 0.1f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set_pixel(x, y, {float(x) / w, float(y) / h, 0.4f + (seed ? jit(rng) : 0.f)});
  return img;
}

FocusMask full_mask(int w, int h) {
  FocusMask m;
  m.width = w;
  m.height = h;
  m.mask.assign(size_t(w) * h, 1);
  return m;
}

}  // namespace

TEST_CASE("psnr: identical images cap at 99 dB") {
  ImageBuffer a = gradient_image(32, 24);
  CHECK(psnr(a, a) == 99.0);
}

TEST_CASE("psnr: uniform residual of 0.1 gives exactly 20 dB") {
  ImageBuffer a(20, 20, 0.3f), b(20, 20, 0.4f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("psnr: full-image mask equals the unmasked value") {
  ImageBuffer a = gradient_image(30, 22, 1), b = gradient_image(30, 22, 2);
  FocusMask m = full_mask(30, 22);
  CHECK(psnr(a, b, &m) == psnr(a, b));
}

TEST_CASE("psnr decreases monotonically with masked MSE") {
  ImageBuffer a(16, 16, 0.5f);
  double prev = 1e9;
  for (float r : {0.05f, 0.1f, 0.2f, 0.4f}) {
    ImageBuffer b(16, 16, 0.5f + r);
    double v = psnr(a, b);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("psnr rejects dimension mismatches") {
  ImageBuffer a(8, 8), b(9, 8);
  CHECK_THROWS_AS(psnr(a, b), std::runtime_error);
}

TEST_CASE("ssim: identical images give 1") {
  ImageBuffer a = gradient_image(24, 20, 3);
  CHECK(*ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim: constant 0 vs constant 1 matches the closed form") {
  ImageBuffer a(16, 16, 0.f), b(16, 16, 1.f);
  // (2*0*1+C1)(2*0+C2) / ((0+1+C1)(0+0+C2)) = C1/(1+C1)
  double expect = 1e-4 / (1 + 1e-4);
  CHECK(*ssim(a, b) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> uni(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    ImageBuffer a(20, 16), b(20, 16);
    for (auto& v : a.rgb) v = uni(rng);
    for (auto& v : b.rgb) v = uni(rng);
    CHECK(*ssim(a, b) == doctest::Approx(*ssim(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("ssim requires images at least as large as the window") {
  ImageBuffer a(10, 12), b(10, 12);
  CHECK_THROWS_AS(ssim(a, b), std::runtime_error);
}

TEST_CASE("ssim: full-image mask equals the unmasked value") {
  ImageBuffer a = gradient_image(26, 22, 7), b = gradient_image(26, 22, 8);
  FocusMask m = full_mask(26, 22);
  CHECK(*ssim(a, b, &m) == *ssim(a, b));
}

TEST_CASE("build_focus_mask: margin 1 reproduces the box union") {
  std::vector<BBox> boxes{{2, 3, 6, 8}, {10, 1, 14, 4}};
  FocusMask m = build_focus_mask(boxes, 1.0, 20, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 20; ++x) {
      bool in = boxes[0].contains(x, y) || boxes[1].contains(x, y);
      CHECK(m.at(x, y) == in);
    }
}

TEST_CASE("build_focus_mask: margin 1.5 expansion with floor/ceil rounding") {
  FocusMask m = build_focus_mask({{10, 10, 20, 20}}, 1.5, 100, 100);
  // center 15, half-size 7.5: floor(7.5)=7, ceil(22.5)=23
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) {
      bool in = x >= 7 && x < 23 && y >= 7 && y < 23;
      CHECK(m.at(x, y) == in);
    }
}

TEST_CASE("build_focus_mask clamps at the borders") {
  FocusMask m = build_focus_mask({{0, 0, 4, 4}}, 2.0, 16, 16);
  CHECK(m.count() > 0);
  CHECK(m.at(0, 0));
  CHECK(m.at(5, 5));
  CHECK(!m.at(7, 7));
}

TEST_CASE("build_focus_mask is monotone in the margin") {
  std::vector<BBox> boxes{{5, 6, 9, 11}};
  FocusMask m1 = build_focus_mask(boxes, 1.2, 32, 32);
  FocusMask m2 = build_focus_mask(boxes, 1.9, 32, 32);
  for (size_t i = 0; i < m1.mask.size(); ++i)
    if (m1.mask[i]) CHECK(m2.mask[i]);
}

TEST_CASE("build_focus_mask rejects an empty box list") {
  CHECK_THROWS_AS(build_focus_mask({}, 1.5, 10, 10), std::runtime_error);
}

TEST_CASE("evaluate: identical frames score 99 dB / SSIM 1 in both variants") {
  ImageBuffer img = gradient_image(32, 24, 9);
  EvalFrame f;
  f.camera_id = 0;
  f.time_index = 0;
  f.pred = img;
  f.gt = img;
  f.boxes = {{8, 6, 20, 16}};
  MetricReport r = evaluate({f}, 1.5);
  CHECK(r.mean_psnr == 99.0);
  CHECK(r.mean_ssim == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(r.mean_psnr_focused.has_value());
  CHECK(*r.mean_psnr_focused == 99.0);
  CHECK(*r.mean_ssim_focused == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(*r.frames[0].coverage > 0);
  CHECK(*r.frames[0].coverage <= 1.0);
}

TEST_CASE("evaluate: corruption outside all masks leaves focused metrics intact") {
  ImageBuffer gt = gradient_image(40, 30, 11);
  std::vector<BBox> boxes{{14, 10, 24, 20}};
  FocusMask mask = build_focus_mask(boxes, 1.5, 40, 30);

  ImageBuffer pred = gt;
  std::mt19937 rng(13);
  std::uniform_real_distribution<float> noise(-0.3f, 0.3f);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      if (!mask.at(x, y)) {
        Vec3f c = pred.get_pixel(x, y);
        pred.set_pixel(x, y, {clamp01(c.x + noise(rng)), clamp01(c.y + noise(rng)),
                              clamp01(c.z + noise(rng))});
      }

  EvalFrame f{0, 0, pred, gt, boxes};
  MetricReport r = evaluate({f}, 1.5);
  CHECK(*r.mean_psnr_focused == 99.0);
  CHECK(r.mean_psnr < 40.0);
}

TEST_CASE("evaluate: dynamic-vs-background corruption flips the metric ordering") {
  // (i) dynamic region corrupted, background intact
  // (ii) background corrupted, dynamic region intact
  ImageBuffer gt = gradient_image(48, 36, 17);
  std::vector<BBox> boxes{{20, 14, 30, 24}};
  FocusMask mask = build_focus_mask(boxes, 1.5, 48, 36);

  auto corrupt = [&](bool inside_box) {
    ImageBuffer img = gt;
    std::mt19937 rng(19);
    std::uniform_real_distribution<float> noise(-0.4f, 0.4f);
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 48; ++x) {
        bool in_dynamic = boxes[0].contains(x, y);
        bool in_mask = mask.at(x, y);
        bool corrupt_this = inside_box ? in_dynamic : !in_mask;
        if (corrupt_this) {
          Vec3f c = img.get_pixel(x, y);
          img.set_pixel(x, y, {clamp01(c.x + noise(rng)), clamp01(c.y + noise(rng)),
                               clamp01(c.z + noise(rng))});
        }
      }
    return img;
  };

  EvalFrame fi{0, 0, corrupt(true), gt, boxes};
  EvalFrame fii{0, 0, corrupt(false), gt, boxes};
  MetricReport ri = evaluate({fi}, 1.5);
  MetricReport rii = evaluate({fii}, 1.5);

  CHECK(ri.mean_psnr > rii.mean_psnr);                      // default prefers (i)
  CHECK(*rii.mean_psnr_focused > *ri.mean_psnr_focused);    // focused prefers (ii)
}

TEST_CASE("evaluate: frames without boxes contribute only to default metrics") {
  ImageBuffer gt = gradient_image(32, 24, 23);
  EvalFrame with{0, 0, gt, gt, {{4, 4, 12, 12}}};
  EvalFrame without{0, 1, gt, gt, {}};
  MetricReport r = evaluate({with, without}, 1.5);
  REQUIRE(r.frames.size() == 2);
  CHECK(r.frames[0].has_boxes);
  CHECK(!r.frames[1].has_boxes);
  CHECK(!r.frames[1].psnr_focused.has_value());
  REQUIRE(r.mean_psnr_focused.has_value());  // from the boxed frame only
}

TEST_CASE("evaluate is invariant to frame ordering") {
  ImageBuffer a = gradient_image(32, 24, 29);
  ImageBuffer b = gradient_image(32, 24, 31);
  EvalFrame f0{0, 0, a, b, {{4, 4, 12, 12}}};
  EvalFrame f1{0, 1, b, a, {}};
  EvalFrame f2{1, 0, a, a, {{10, 8, 20, 18}}};
  MetricReport fwd = evaluate({f0, f1, f2}, 1.5);
  MetricReport rev = evaluate({f2, f0, f1}, 1.5);
  CHECK(fwd.mean_psnr == rev.mean_psnr);
  CHECK(fwd.mean_ssim == rev.mean_ssim);
  CHECK(*fwd.mean_psnr_focused == *rev.mean_psnr_focused);
  CHECK(report_to_json(fwd) == report_to_json(rev));
}

TEST_CASE("evaluate rejects duplicate (camera, time) pairs") {
  ImageBuffer a = gradient_image(16, 16, 37);
  EvalFrame f{0, 0, a, a, {}};
  CHECK_THROWS_AS(evaluate({f, f}, 1.5), std::runtime_error);
}

TEST_CASE("report JSON carries default, focused, frames, and margin") {
  ImageBuffer img = gradient_image(32, 24, 41);
  EvalFrame f{2, 3, img, img, {{4, 4, 10, 10}}};
  MetricReport r = evaluate({f}, 1.25);
  std::string js = report_to_json(r);
  CHECK(js.find("\"default\"") != std::string::npos);
  CHECK(js.find("\"focused\"") != std::string::npos);
  CHECK(js.find("\"frames\"") != std::string::npos);
  CHECK(js.find("\"margin\"") != std::string::npos);
  CHECK(js.find("\"psnr_f\"") != std::string::npos);
  CHECK(js.find("\"coverage\"") != std::string::npos);
  CHECK(js.find("\"lpips\"") != std::string::npos);
}
