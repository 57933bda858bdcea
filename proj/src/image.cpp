#include "dynfield/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace dynfield {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

uint8_t quantize8(float v) {
  float c = clamp01(v);
  return uint8_t(std::lround(c * 255.0f));
}

void write_png_rgb8(const std::string& path, const ImageBuffer& img) {
  FilePtr fp(fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write error: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);

  std::vector<uint8_t> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    const float* src = img.pixel(0, y);
    for (int i = 0; i < img.width * 3; ++i) row[i] = quantize8(src[i]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageBuffer read_png_rgb8(const std::string& path) {
  FilePtr fp(fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image: " + path);

  uint8_t header[8];
  if (fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw std::runtime_error("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read error: " + path);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  ImageBuffer img{int(w), int(h)};
  std::vector<uint8_t> row(size_t(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    float* dst = img.pixel(0, int(y));
    for (size_t i = 0; i < row.size(); ++i) dst[i] = float(row[i]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_pfm(const std::string& path, const DepthBuffer& depth) {
  FilePtr fp(fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  fprintf(fp.get(), "Pf\n%d %d\n-1.0\n", depth.width, depth.height);
  // PFM stores rows bottom-to-top.
  for (int y = depth.height - 1; y >= 0; --y) {
    size_t n = fwrite(&depth.depth[size_t(y) * depth.width], sizeof(float), depth.width, fp.get());
    if (n != size_t(depth.width)) throw std::runtime_error("short write: " + path);
  }
}

DepthBuffer read_pfm(const std::string& path) {
  FilePtr fp(fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open depth map: " + path);
  char magic[3] = {0};
  int w = 0, h = 0;
  float scale = 0;
  if (fscanf(fp.get(), "%2s %d %d %f", magic, &w, &h, &scale) != 4 || strcmp(magic, "Pf") != 0)
    throw std::runtime_error("not a grayscale PFM file: " + path);
  if (scale >= 0) throw std::runtime_error("big-endian PFM unsupported: " + path);
  fgetc(fp.get());  // single whitespace after the scale line

  DepthBuffer depth(w, h);
  for (int y = h - 1; y >= 0; --y) {
    size_t n = fread(&depth.depth[size_t(y) * w], sizeof(float), w, fp.get());
    if (n != size_t(w)) throw std::runtime_error("truncated PFM: " + path);
  }
  return depth;
}

}  // namespace dynfield
