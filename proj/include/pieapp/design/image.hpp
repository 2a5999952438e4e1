#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pieapp/numeric/array.hpp"

namespace pieapp::design {

// 8-bit image, grayscale (1 channel) or RGB (3), interleaved row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c)
      : width(w), height(h), channels(c), pixels(w * h * c, 0) {}

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  bool same_dims(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Planar [C,H,W] doubles in [0,1].
numeric::Array to_planar(const Image& img);

// Binary PGM (P5) for grayscale, PPM (P6) for RGB.
void save_image(const Image& img, const std::string& path);
Image load_image(const std::string& path);

// Procedural reference image: smooth random field (low-frequency cosines plus
// a few blobs), mid-range values so distortions have headroom.
Image make_reference_image(std::size_t size, std::size_t channels,
                           std::uint64_t seed);

}  // namespace pieapp::design
