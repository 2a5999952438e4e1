#pragma once

#include <cstdint>
#include <string>

#include "pieapp/design/image.hpp"

namespace pieapp::design {

// Desk-scale distortion bank. Strength is normalised to [0, 1] per family;
// strength 0 is the identity for every family. Internal ranges:
//   gaussian_noise  additive iid N(0, sigma^2), sigma = 0.25 * strength
//   box_blur        fractional-radius box blur, radius = 3 * strength
//   quantize        levels = round(256 - 254 * strength)  (256 .. 2)
//   contrast_scale  v -> mid + (1 - 0.85 * strength) * (v - mid)
//   pixelate        block size = 1 + round(6 * strength)
enum class DistortionFamily {
  gaussian_noise,
  box_blur,
  quantize,
  contrast_scale,
  pixelate,
};

struct DistortionSpec {
  DistortionFamily family = DistortionFamily::gaussian_noise;
  double strength = 0.0;
};

std::string family_name(DistortionFamily f);
DistortionFamily family_from_name(const std::string& name);
constexpr std::size_t kFamilyCount = 5;

// Deterministic given (spec, seed); only gaussian_noise consumes the seed.
Image apply_distortion(const Image& img, const DistortionSpec& spec,
                       std::uint64_t seed);

}  // namespace pieapp::design
