#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pieapp/design/image.hpp"
#include "pieapp/numeric/tape.hpp"

namespace pieapp::train {

struct PatchLoc {
  std::size_t x = 0;
  std::size_t y = 0;
};

// Contract every trainable error-estimation function implements. The trainer
// needs branch scores built on a tape plus the parameter list for the
// optimizer; the preference sigmoid depends on score differences only, so
// implementations are free to return raw or constant-calibrated scores.
// Swapping this implementation swaps the whole error-estimation block.
class ErrorEstimator {
 public:
  virtual ~ErrorEstimator() = default;

  virtual std::vector<numeric::Parameter*> parameters() = 0;

  // Side length of the square patches the estimator consumes; the trainer
  // samples co-located patch positions from this.
  virtual std::size_t patch_size() const = 0;

  // Image-error score of `dist` against `ref` over the given patch
  // locations, recorded on the tape for backprop. May be raw or calibrated;
  // the preference sigmoid sees only score differences.
  virtual numeric::Value branch_score(numeric::Tape& tape,
                                      const design::Image& dist,
                                      const design::Image& ref,
                                      std::span<const PatchLoc> patches) = 0;

  // Both branches of one training triplet with co-located patches.
  // Implementations may override to share per-reference work.
  virtual std::pair<numeric::Value, numeric::Value> pair_scores(
      numeric::Tape& tape, const design::Image& a, const design::Image& b,
      const design::Image& ref, std::span<const PatchLoc> patches) {
    return {branch_score(tape, a, ref, patches),
            branch_score(tape, b, ref, patches)};
  }

  // Calibrated inference-time score (0 for the reference against itself).
  virtual double score(design::Image const& dist, const design::Image& ref,
                       std::size_t n_patches, std::uint64_t seed) = 0;

  // Hook for recalibration after an optimizer step (reference-zero etc.).
  virtual void on_parameters_updated() {}

  virtual void save_checkpoint(const std::string& path) const = 0;
};

}  // namespace pieapp::train
