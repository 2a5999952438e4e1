#include "pieapp/design/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pieapp/common/rng.hpp"

namespace pieapp::design {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("experiment-design: coverage: " + msg);
}

// number of valid top-left positions (per axis) that cover coordinate q
std::size_t covering_positions(std::size_t q, std::size_t image,
                               std::size_t patch) {
  const long lo = std::max<long>(0, static_cast<long>(q) -
                                        static_cast<long>(patch) + 1);
  const long hi =
      std::min<long>(static_cast<long>(q), static_cast<long>(image - patch));
  return hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0;
}

}  // namespace

double coverage_mc_pixel(std::size_t image_size, std::size_t patch_size,
                         std::size_t n_patches, std::size_t px, std::size_t py,
                         std::size_t trials, std::uint64_t seed) {
  const std::size_t valid = image_size - patch_size + 1;
  rng::Rng r(seed);
  std::size_t covered = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    bool hit = false;
    for (std::size_t i = 0; i < n_patches && !hit; ++i) {
      const std::size_t x = r.below(valid);
      const std::size_t y = r.below(valid);
      hit = (px >= x && px < x + patch_size && py >= y &&
             py < y + patch_size);
    }
    covered += hit ? 1 : 0;
  }
  return static_cast<double>(covered) / static_cast<double>(trials);
}

CoverageReport coverage_probability(std::size_t image_size,
                                    std::size_t patch_size,
                                    std::size_t n_patches, CoverageMode mode,
                                    const CoverageOptions& opts) {
  if (patch_size == 0 || image_size == 0 || patch_size > image_size) {
    fail("invalid image/patch sizes");
  }
  if (n_patches == 0) fail("need at least one patch");

  CoverageReport rep;
  rep.image_size = image_size;
  rep.patch_size = patch_size;
  rep.n_patches = n_patches;
  rep.mode = mode;

  const std::size_t valid = image_size - patch_size + 1;
  const double v = static_cast<double>(valid);
  const double frac =
      static_cast<double>(patch_size) / v;  // interior per-axis probability
  rep.interior_p =
      1.0 - std::pow(1.0 - std::min(1.0, frac) * std::min(1.0, frac),
                     static_cast<double>(n_patches));

  if (mode == CoverageMode::analytic_interior) {
    // exact per-pixel probabilities from the per-axis covering counts
    std::vector<double> axis(image_size);
    for (std::size_t q = 0; q < image_size; ++q) {
      axis[q] = static_cast<double>(covering_positions(q, image_size,
                                                       patch_size)) /
                v;
    }
    double min_p = 1.0, sum_p = 0.0;
    if (opts.keep_grid) rep.grid.resize(image_size * image_size);
    for (std::size_t y = 0; y < image_size; ++y) {
      for (std::size_t x = 0; x < image_size; ++x) {
        const double p =
            1.0 - std::pow(1.0 - axis[x] * axis[y],
                           static_cast<double>(n_patches));
        min_p = std::min(min_p, p);
        sum_p += p;
        if (opts.keep_grid) rep.grid[y * image_size + x] = p;
      }
    }
    rep.min_p = min_p;
    rep.mean_p = sum_p / static_cast<double>(image_size * image_size);
    rep.corner_p = 1.0 - std::pow(1.0 - axis[0] * axis[0],
                                  static_cast<double>(n_patches));
    return rep;
  }

  // monte_carlo_all: per-trial coverage grid via 2-D difference counts
  rng::Rng r(opts.seed);
  std::vector<std::uint32_t> covered(image_size * image_size, 0);
  std::vector<std::int32_t> diff((image_size + 1) * (image_size + 1));
  for (std::size_t t = 0; t < opts.mc_trials; ++t) {
    std::fill(diff.begin(), diff.end(), 0);
    const std::size_t stride = image_size + 1;
    for (std::size_t i = 0; i < n_patches; ++i) {
      const std::size_t x = r.below(valid);
      const std::size_t y = r.below(valid);
      diff[y * stride + x] += 1;
      diff[y * stride + x + patch_size] -= 1;
      diff[(y + patch_size) * stride + x] -= 1;
      diff[(y + patch_size) * stride + x + patch_size] += 1;
    }
    // prefix sums; a pixel is covered when its count is positive
    for (std::size_t y = 0; y < image_size; ++y) {
      std::int32_t row = 0;
      for (std::size_t x = 0; x < image_size; ++x) {
        row += diff[y * stride + x];
        const std::int32_t above =
            y > 0 ? diff[(y - 1) * stride + x] : 0;
        diff[y * stride + x] = row + above;
        if (diff[y * stride + x] > 0) covered[y * image_size + x] += 1;
      }
    }
  }
  double min_p = 1.0, sum_p = 0.0;
  if (opts.keep_grid) rep.grid.resize(image_size * image_size);
  for (std::size_t i = 0; i < covered.size(); ++i) {
    const double p = static_cast<double>(covered[i]) /
                     static_cast<double>(opts.mc_trials);
    min_p = std::min(min_p, p);
    sum_p += p;
    if (opts.keep_grid) rep.grid[i] = p;
  }
  rep.min_p = min_p;
  rep.mean_p = sum_p / static_cast<double>(covered.size());
  rep.corner_p =
      static_cast<double>(covered[0]) / static_cast<double>(opts.mc_trials);
  return rep;
}

}  // namespace pieapp::design
