#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynfield/vec.hpp"

namespace dynfield {

// Row-major RGB image, linear values in [0,1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // width*height*3

  ImageBuffer() = default;
  ImageBuffer(int w, int h, float fill = 0.f) : width(w), height(h), rgb(size_t(w) * h * 3, fill) {}

  float* pixel(int x, int y) { return &rgb[(size_t(y) * width + x) * 3]; }
  const float* pixel(int x, int y) const { return &rgb[(size_t(y) * width + x) * 3]; }

  void set_pixel(int x, int y, const Vec3f& c) {
    float* p = pixel(x, y);
    p[0] = c.x; p[1] = c.y; p[2] = c.z;
  }
  Vec3f get_pixel(int x, int y) const {
    const float* p = pixel(x, y);
    return {p[0], p[1], p[2]};
  }
  size_t num_pixels() const { return size_t(width) * height; }
};

// Row-major single-channel depth map in scene units; +inf marks a miss.
struct DepthBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> depth;

  DepthBuffer() = default;
  DepthBuffer(int w, int h, float fill = 0.f) : width(w), height(h), depth(size_t(w) * h, fill) {}

  float& at(int x, int y) { return depth[size_t(y) * width + x]; }
  float at(int x, int y) const { return depth[size_t(y) * width + x]; }
};

// 8-bit RGB PNG. Quantization: round(v*255) on [0,1] values.
void write_png_rgb8(const std::string& path, const ImageBuffer& img);
ImageBuffer read_png_rgb8(const std::string& path);

uint8_t quantize8(float v);

// Grayscale PFM ('Pf'), little-endian, rows bottom-to-top.
void write_pfm(const std::string& path, const DepthBuffer& depth);
DepthBuffer read_pfm(const std::string& path);

}  // namespace dynfield
