#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pieapp/design/image.hpp"
#include "pieapp/net/config.hpp"
#include "pieapp/numeric/array.hpp"
#include "pieapp/numeric/tape.hpp"
#include "pieapp/train/estimator.hpp"

namespace pieapp::net {

// Uniform-with-replacement patch top-left positions over the valid range.
std::vector<train::PatchLoc> sample_patch_locations(std::size_t image_w,
                                                    std::size_t image_h,
                                                    std::size_t patch,
                                                    std::size_t n,
                                                    std::uint64_t seed);

// Planar [C,P,P] doubles in [0,1] for one patch.
numeric::Array extract_patch(const design::Image& img, train::PatchLoc loc,
                             std::size_t patch);

// Weighted mean of patch errors (plain-double form of the aggregation op).
double aggregate(const std::vector<double>& errors,
                 const std::vector<double>& weights);

// The error-estimation function f: one shared FE parameter set feeding every
// image branch, a score head and a weight head on feature differences, patch
// aggregation, and an explicit reference-zero constant so f(R,R) == 0.
class PieAppNet : public train::ErrorEstimator {
 public:
  PieAppNet(NetConfig cfg, std::uint64_t init_seed);

  const NetConfig& config() const { return cfg_; }
  double reference_zero() const { return reference_zero_; }

  // Raw output of the score head on a zero feature difference. Stored and
  // subtracted from every patch error when reporting calibrated scores.
  double compute_reference_zero();
  void recalibrate() { reference_zero_ = compute_reference_zero(); }

  struct FeaturePair {
    numeric::Value x;  // multi-scale concat
    numeric::Value y;  // final layer
  };
  FeaturePair extract_features(numeric::Tape& tape,
                               const numeric::Array& patch);

  // Score head on (x_ref - x_dist); raw, uncalibrated.
  numeric::Value patch_error(numeric::Tape& tape, numeric::Value x_ref,
                             numeric::Value x_dist);
  // Weight head on (y_ref - y_dist); softplus + 1e-6 keeps it positive.
  numeric::Value patch_weight(numeric::Tape& tape, numeric::Value y_ref,
                              numeric::Value y_dist);

  // ErrorEstimator surface.
  std::vector<numeric::Parameter*> parameters() override;
  std::size_t patch_size() const override { return cfg_.patch_size; }
  numeric::Value branch_score(numeric::Tape& tape, const design::Image& dist,
                              const design::Image& ref,
                              std::span<const train::PatchLoc> patches) override;
  std::pair<numeric::Value, numeric::Value> pair_scores(
      numeric::Tape& tape, const design::Image& a, const design::Image& b,
      const design::Image& ref,
      std::span<const train::PatchLoc> patches) override;
  double score(const design::Image& dist, const design::Image& ref,
               std::size_t n_patches, std::uint64_t seed) override;
  void on_parameters_updated() override { recalibrate(); }
  void save_checkpoint(const std::string& path) const override;

  static PieAppNet load_checkpoint(const std::string& path);

 private:
  void build_params(std::uint64_t init_seed);

  NetConfig cfg_;
  double reference_zero_ = 0.0;
  // FE stack then score head then weight head; order fixed for checkpoints
  std::vector<std::unique_ptr<numeric::Parameter>> params_;
  // cached positions into params_
  std::vector<std::size_t> conv_w_, conv_b_;
  std::size_t score_w1_ = 0, score_b1_ = 0, score_w2_ = 0, score_b2_ = 0;
  std::size_t weight_w1_ = 0, weight_b1_ = 0, weight_w2_ = 0, weight_b2_ = 0;
};

}  // namespace pieapp::net
