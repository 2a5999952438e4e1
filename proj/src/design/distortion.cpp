#include "pieapp/design/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pieapp/common/rng.hpp"

namespace pieapp::design {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("experiment-design: " + msg);
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::min(255.0, std::max(0.0, v))));
}

Image gaussian_noise(const Image& img, double strength, std::uint64_t seed) {
  const double sigma = 0.25 * strength * 255.0;
  rng::Rng r(seed);
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = to_u8(static_cast<double>(img.pixels[i]) + sigma * r.normal());
  }
  return out;
}

// Separable box blur with replicated borders; fractional radius blends the
// two neighbouring integer radii.
Image box_blur(const Image& img, double strength) {
  const double radius = 3.0 * strength;
  const long r0 = static_cast<long>(radius);
  const double frac = radius - static_cast<double>(r0);

  auto blur_radius = [&img](long radius) {
    std::vector<double> out(img.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<double>(img.pixels[i]);
    }
    if (radius == 0) return out;
    std::vector<double> tmp(out.size());
    const std::size_t w = img.width, h = img.height, c = img.channels;
    const double inv = 1.0 / static_cast<double>(2 * radius + 1);
    // horizontal
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (long d = -radius; d <= radius; ++d) {
            const long xx = std::clamp<long>(static_cast<long>(x) + d, 0,
                                             static_cast<long>(w) - 1);
            acc += out[(y * w + static_cast<std::size_t>(xx)) * c + ch];
          }
          tmp[(y * w + x) * c + ch] = acc * inv;
        }
      }
    }
    // vertical
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (long d = -radius; d <= radius; ++d) {
            const long yy = std::clamp<long>(static_cast<long>(y) + d, 0,
                                             static_cast<long>(h) - 1);
            acc += tmp[(static_cast<std::size_t>(yy) * w + x) * c + ch];
          }
          out[(y * w + x) * c + ch] = acc * inv;
        }
      }
    }
    return out;
  };

  const std::vector<double> lo = blur_radius(r0);
  Image out = img;
  if (frac == 0.0) {
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      out.pixels[i] = to_u8(lo[i]);
    }
    return out;
  }
  const std::vector<double> hi = blur_radius(r0 + 1);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = to_u8((1.0 - frac) * lo[i] + frac * hi[i]);
  }
  return out;
}

Image quantize(const Image& img, double strength) {
  const long levels =
      std::max<long>(2, std::lround(256.0 - 254.0 * strength));
  if (levels >= 256) return img;
  const double scale = static_cast<double>(levels - 1) / 255.0;
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double q = std::round(static_cast<double>(img.pixels[i]) * scale);
    out.pixels[i] = to_u8(q / scale);
  }
  return out;
}

Image contrast_scale(const Image& img, double strength) {
  const double k = 1.0 - 0.85 * strength;
  if (k == 1.0) return img;
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] =
        to_u8(127.5 + k * (static_cast<double>(img.pixels[i]) - 127.5));
  }
  return out;
}

Image pixelate(const Image& img, double strength) {
  const std::size_t block =
      1 + static_cast<std::size_t>(std::lround(6.0 * strength));
  if (block <= 1) return img;
  Image out = img;
  const std::size_t w = img.width, h = img.height, c = img.channels;
  for (std::size_t by = 0; by < h; by += block) {
    const std::size_t ey = std::min(h, by + block);
    for (std::size_t bx = 0; bx < w; bx += block) {
      const std::size_t ex = std::min(w, bx + block);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            acc += static_cast<double>(img.at(x, y, ch));
          }
        }
        const double mean =
            acc / static_cast<double>((ey - by) * (ex - bx));
        const std::uint8_t q = to_u8(mean);
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            out.at(x, y, ch) = q;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

std::string family_name(DistortionFamily f) {
  switch (f) {
    case DistortionFamily::gaussian_noise: return "gaussian_noise";
    case DistortionFamily::box_blur: return "box_blur";
    case DistortionFamily::quantize: return "quantize";
    case DistortionFamily::contrast_scale: return "contrast_scale";
    case DistortionFamily::pixelate: return "pixelate";
  }
  fail("family_name: unknown family");
}

DistortionFamily family_from_name(const std::string& name) {
  if (name == "gaussian_noise") return DistortionFamily::gaussian_noise;
  if (name == "box_blur") return DistortionFamily::box_blur;
  if (name == "quantize") return DistortionFamily::quantize;
  if (name == "contrast_scale") return DistortionFamily::contrast_scale;
  if (name == "pixelate") return DistortionFamily::pixelate;
  fail("unknown distortion family '" + name + "'");
}

Image apply_distortion(const Image& img, const DistortionSpec& spec,
                       std::uint64_t seed) {
  if (spec.strength < 0.0 || spec.strength > 1.0) {
    fail("apply_distortion: strength must be in [0, 1]");
  }
  if (spec.strength == 0.0) return img;
  switch (spec.family) {
    case DistortionFamily::gaussian_noise:
      return gaussian_noise(img, spec.strength, seed);
    case DistortionFamily::box_blur: return box_blur(img, spec.strength);
    case DistortionFamily::quantize: return quantize(img, spec.strength);
    case DistortionFamily::contrast_scale:
      return contrast_scale(img, spec.strength);
    case DistortionFamily::pixelate: return pixelate(img, spec.strength);
  }
  fail("apply_distortion: unknown family");
}

}  // namespace pieapp::design
