#pragma once

#include <string>
#include <vector>

#include "eiss/geometry.hpp"

namespace eiss {

// Dense pixel raster, row-major and channel-interleaved, intensities in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), pixels(static_cast<size_t>(w) * h * c, 0.0f) {}

  size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * width + x) * channels + c;
  }
  float at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  float& at(int x, int y, int c) { return pixels[index(x, y, c)]; }

  Region frame() const { return Region{0, 0, width, height}; }
  bool empty() const { return width == 0 || height == 0; }

  bool operator==(const Image& other) const = default;
};

// Copy of img with every pixel inside region set to 0 in all channels.
// The region is clamped to the frame; an empty clamp is a no-op.
Image blacken(const Image& img, const Region& region);

// Extract the sub-raster under region (clamped to the frame) and resample it
// to target_w x target_h with corner-aligned bilinear interpolation. Throws
// EmptyCropError when the clamped region is empty.
Image crop_rescale(const Image& img, const Region& region, int target_w, int target_h);

// 8-bit binary PPM (P6, 3-channel) / PGM (P5, 1-channel) reader and writer.
// Intensities map to [0,1] by dividing by 255.
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

}  // namespace eiss
