#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdtk/errors.hpp"

namespace fdtk {

// 8-bit raster, row-major, channels interleaved. channels is 1 (gray) or 3 (RGB).
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  static RasterImage filled(int width, int height, int channels, std::uint8_t value);
};

void validate(const RasterImage& img);

// Decodes PNG or JPEG, sniffed by signature. Alpha is stripped, palette and
// sub-8-bit gray are expanded, 16-bit channels are reduced to 8.
RasterImage load_image(const std::filesystem::path& path);

// PNG only; lossless so perturbed images round-trip bit-exactly.
void save_image(const RasterImage& img, const std::filesystem::path& path);

}  // namespace fdtk
