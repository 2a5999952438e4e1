#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pieapp::design {

// Probability that each pixel is covered by at least one of n patches whose
// top-left corners are uniform over the valid positions.
enum class CoverageMode { analytic_interior, monte_carlo_all };

struct CoverageReport {
  std::size_t image_size = 0;
  std::size_t patch_size = 0;
  std::size_t n_patches = 0;
  CoverageMode mode = CoverageMode::analytic_interior;
  double min_p = 0.0;
  double mean_p = 0.0;
  double interior_p = 0.0;  // closed form 1 - (1 - (P/V)^2)^n
  double corner_p = 0.0;
  std::vector<double> grid;  // per-pixel, row-major; filled when requested
};

struct CoverageOptions {
  std::uint64_t seed = 0;
  std::size_t mc_trials = 4000;
  bool keep_grid = false;
};

CoverageReport coverage_probability(std::size_t image_size,
                                    std::size_t patch_size,
                                    std::size_t n_patches, CoverageMode mode,
                                    const CoverageOptions& opts = {});

// Monte Carlo estimate for a single pixel; cheap enough for tight bounds.
double coverage_mc_pixel(std::size_t image_size, std::size_t patch_size,
                         std::size_t n_patches, std::size_t px, std::size_t py,
                         std::size_t trials, std::uint64_t seed);

}  // namespace pieapp::design
