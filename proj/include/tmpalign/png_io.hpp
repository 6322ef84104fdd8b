#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmpalign/core.hpp"

namespace tmpalign {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void write_png_bytes(const std::string& path, int width, int height, int color_type,
                            int channels, const std::vector<std::uint8_t>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png writer allocation failed");
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * width * channels);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Writes a [0, 1] luma grid as 8-bit grayscale PNG.
inline void write_png_gray(const std::string& path, const FeatureMap& img) {
  if (img.empty() || img.channels() != 1)
    throw std::invalid_argument("write_png_gray: single-channel image required");
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double v = std::clamp(static_cast<double>(img.at(x, y, 0)), 0.0, 1.0);
      bytes[static_cast<std::size_t>(y) * img.width() + x] =
          static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  detail::write_png_bytes(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 1, bytes);
}

inline void write_png_mask(const std::string& path, const ValidityMask& mask) {
  if (mask.empty()) throw std::invalid_argument("write_png_mask: empty mask");
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.data()[i] ? 255 : 0;
  detail::write_png_bytes(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 1, bytes);
}

inline void write_png_rgb(const std::string& path, int width, int height,
                          const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("write_png_rgb: byte count mismatch");
  detail::write_png_bytes(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb);
}

/// Reads any 8/16-bit gray or color PNG as a [0, 1] single-channel luma grid.
/// Color inputs are converted with libpng's default luma coefficients.
inline FeatureMap read_png_gray(const std::string& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open for reading: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png reader allocation failed");
  }
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1.0, -1.0);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  bytes.resize(static_cast<std::size_t>(width) * height * channels);
  rows.resize(height);
  for (int y = 0; y < height; ++y)
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  if (channels != 1)
    throw std::runtime_error("png read produced unexpected channel count: " + path);

  FeatureMap out(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y, 0) =
          static_cast<float>(bytes[static_cast<std::size_t>(y) * width + x] / 255.0);
  return out;
}

inline ValidityMask read_png_mask(const std::string& path) {
  const FeatureMap img = read_png_gray(path);
  ValidityMask mask(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      mask.at(x, y) = img.at(x, y, 0) >= 0.5f ? 1 : 0;
  return mask;
}

}  // namespace tmpalign
