#pragma once

#include <filesystem>
#include <vector>

namespace lagkit {

// Grayscale raster, row-major, intensities in [0, 1].
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  float& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool empty() const { return height == 0 || width == 0; }
};

// Decodes PGM (P2/P5) always, PNG when built with libpng. Color input is
// converted to luma. Throws IoError on unreadable or malformed files.
GrayImage load_image(const std::filesystem::path& path);

void save_pgm(const GrayImage& image, const std::filesystem::path& path);

// Bilinear resample to exactly height x width.
GrayImage resize_bilinear(const GrayImage& image, int height, int width);

// Downscale so max(H, W) == max_side when larger; never upscales.
GrayImage resize_max_side(const GrayImage& image, int max_side);

}  // namespace lagkit
