#include "pieapp/net/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "pieapp/common/rng.hpp"

namespace pieapp::net {

namespace {
[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("pieapp-net: " + msg);
}
}  // namespace

std::size_t NetConfig::feature_length() const {
  std::size_t total = 0;
  for (std::size_t tap : concat_taps) {
    const std::size_t side = spatial_after(tap);
    total += conv_widths[tap - 1] * side * side;
  }
  return total;
}

std::size_t NetConfig::y_length() const {
  const std::size_t side = spatial_after(n_layers());
  return conv_widths.back() * side * side;
}

void NetConfig::validate() const {
  if (conv_widths.empty()) fail("NetConfig: conv_widths is empty");
  for (std::size_t w : conv_widths) {
    if (w == 0) fail("NetConfig: conv widths must be positive");
  }
  if (concat_taps.empty()) fail("NetConfig: concat_taps is empty");
  std::set<std::size_t> seen;
  for (std::size_t tap : concat_taps) {
    if (tap < 1 || tap > n_layers()) {
      fail("NetConfig: tap " + std::to_string(tap) + " outside 1.." +
           std::to_string(n_layers()));
    }
    if (!seen.insert(tap).second) fail("NetConfig: duplicate tap");
  }
  if (hidden_units == 0) fail("NetConfig: hidden_units must be positive");
  if (in_channels != 1 && in_channels != 3) {
    fail("NetConfig: in_channels must be 1 or 3");
  }
  const std::size_t divisor = std::size_t{1} << n_pools();
  if (patch_size == 0 || patch_size % divisor != 0 ||
      patch_size / divisor == 0) {
    fail("NetConfig: patch_size must be a positive multiple of 2^" +
         std::to_string(n_pools()));
  }
  if (patches_train == 0 || patches_eval == 0) {
    fail("NetConfig: patch counts must be positive");
  }
}

std::vector<train::PatchLoc> sample_patch_locations(std::size_t image_w,
                                                    std::size_t image_h,
                                                    std::size_t patch,
                                                    std::size_t n,
                                                    std::uint64_t seed) {
  if (image_w < patch || image_h < patch) {
    fail("image smaller than patch size");
  }
  rng::Rng r(seed);
  std::vector<train::PatchLoc> locs(n);
  for (auto& loc : locs) {
    loc.x = r.below(image_w - patch + 1);
    loc.y = r.below(image_h - patch + 1);
  }
  return locs;
}

numeric::Array extract_patch(const design::Image& img, train::PatchLoc loc,
                             std::size_t patch) {
  if (loc.x + patch > img.width || loc.y + patch > img.height) {
    fail("patch location out of bounds");
  }
  numeric::Array out({img.channels, patch, patch});
  const std::size_t plane = patch * patch;
  for (std::size_t y = 0; y < patch; ++y) {
    for (std::size_t x = 0; x < patch; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out[c * plane + y * patch + x] =
            static_cast<double>(img.at(loc.x + x, loc.y + y, c)) / 255.0;
      }
    }
  }
  return out;
}

double aggregate(const std::vector<double>& errors,
                 const std::vector<double>& weights) {
  if (errors.empty()) fail("aggregate: empty input");
  if (errors.size() != weights.size()) {
    fail("aggregate: errors/weights length mismatch");
  }
  double sw = 0.0, sws = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(weights[i] > 0.0)) fail("aggregate: weights must be positive");
    sw += weights[i];
    sws += weights[i] * errors[i];
  }
  return sws / sw;
}

PieAppNet::PieAppNet(NetConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  build_params(init_seed);
  recalibrate();
}

void PieAppNet::build_params(std::uint64_t init_seed) {
  using numeric::Array;
  using numeric::Parameter;
  params_.clear();

  std::size_t pi = 0;
  auto push = [this, &pi, init_seed](const std::string& name,
                                     std::vector<std::size_t> shape,
                                     double stddev) {
    Array value(std::move(shape));
    if (stddev > 0.0) {
      rng::Rng r(rng::derive(init_seed, "init", pi));
      for (std::size_t i = 0; i < value.size(); ++i) {
        value[i] = stddev * r.normal();
      }
    }
    params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
    ++pi;
    return params_.size() - 1;
  };

  conv_w_.clear();
  conv_b_.clear();
  std::size_t in_ch = cfg_.in_channels;
  for (std::size_t layer = 1; layer <= cfg_.n_layers(); ++layer) {
    const std::size_t out_ch = cfg_.conv_widths[layer - 1];
    char name[32];
    std::snprintf(name, sizeof(name), "fe.conv%02zu", layer);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * 9));
    conv_w_.push_back(push(std::string(name) + ".weight",
                           {out_ch, in_ch, 3, 3}, stddev));
    conv_b_.push_back(push(std::string(name) + ".bias", {out_ch}, 0.0));
    in_ch = out_ch;
  }

  const std::size_t xlen = cfg_.feature_length();
  const std::size_t ylen = cfg_.y_length();
  const std::size_t h = cfg_.hidden_units;
  score_w1_ = push("sc.score.fc1.weight", {h, xlen},
                   std::sqrt(2.0 / static_cast<double>(xlen)));
  score_b1_ = push("sc.score.fc1.bias", {h}, 0.0);
  score_w2_ = push("sc.score.fc2.weight", {1, h},
                   std::sqrt(1.0 / static_cast<double>(h)));
  score_b2_ = push("sc.score.fc2.bias", {1}, 0.0);
  weight_w1_ = push("sc.weight.fc1.weight", {h, ylen},
                    std::sqrt(2.0 / static_cast<double>(ylen)));
  weight_b1_ = push("sc.weight.fc1.bias", {h}, 0.0);
  weight_w2_ = push("sc.weight.fc2.weight", {1, h},
                    std::sqrt(1.0 / static_cast<double>(h)));
  weight_b2_ = push("sc.weight.fc2.bias", {1}, 0.0);
}

std::vector<numeric::Parameter*> PieAppNet::parameters() {
  std::vector<numeric::Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

PieAppNet::FeaturePair PieAppNet::extract_features(numeric::Tape& tape,
                                                   const numeric::Array& patch) {
  const auto& shape = patch.shape();
  if (shape.size() != 3 || shape[0] != cfg_.in_channels ||
      shape[1] != cfg_.patch_size || shape[2] != cfg_.patch_size) {
    fail("extract_features: patch shape does not match NetConfig");
  }
  numeric::Value act = tape.constant(patch);
  std::vector<numeric::Value> taps;
  taps.reserve(cfg_.concat_taps.size());
  for (std::size_t layer = 1; layer <= cfg_.n_layers(); ++layer) {
    act = tape.relu(tape.conv2d(act, tape.param(*params_[conv_w_[layer - 1]]),
                                tape.param(*params_[conv_b_[layer - 1]])));
    if (layer % 2 == 0) act = tape.maxpool2(act);
    if (std::find(cfg_.concat_taps.begin(), cfg_.concat_taps.end(), layer) !=
        cfg_.concat_taps.end()) {
      taps.push_back(act);
    }
  }
  FeaturePair fp;
  fp.x = tape.concat(taps);
  fp.y = tape.concat({act});  // flattened final activation
  return fp;
}

numeric::Value PieAppNet::patch_error(numeric::Tape& tape, numeric::Value x_ref,
                                      numeric::Value x_dist) {
  if (x_ref.value().size() != x_dist.value().size()) {
    fail("patch_error: feature length mismatch");
  }
  numeric::Value d = tape.sub(x_ref, x_dist);
  numeric::Value h = tape.relu(tape.fully_connected(
      d, tape.param(*params_[score_w1_]), tape.param(*params_[score_b1_])));
  return tape.fully_connected(h, tape.param(*params_[score_w2_]),
                              tape.param(*params_[score_b2_]));
}

numeric::Value PieAppNet::patch_weight(numeric::Tape& tape,
                                       numeric::Value y_ref,
                                       numeric::Value y_dist) {
  if (y_ref.value().size() != y_dist.value().size()) {
    fail("patch_weight: feature length mismatch");
  }
  numeric::Value d = tape.sub(y_ref, y_dist);
  numeric::Value h = tape.relu(tape.fully_connected(
      d, tape.param(*params_[weight_w1_]), tape.param(*params_[weight_b1_])));
  numeric::Value raw = tape.fully_connected(
      h, tape.param(*params_[weight_w2_]), tape.param(*params_[weight_b2_]));
  return tape.softplus_plus(raw, 1e-6);
}

double PieAppNet::compute_reference_zero() {
  numeric::Tape tape(false);
  numeric::Value zero = tape.constant(numeric::Array({cfg_.feature_length()}));
  numeric::Value h = tape.relu(tape.fully_connected(
      zero, tape.param(*params_[score_w1_]), tape.param(*params_[score_b1_])));
  numeric::Value s = tape.fully_connected(h, tape.param(*params_[score_w2_]),
                                          tape.param(*params_[score_b2_]));
  return s.item();
}

numeric::Value PieAppNet::branch_score(numeric::Tape& tape,
                                       const design::Image& dist,
                                       const design::Image& ref,
                                       std::span<const train::PatchLoc> locs) {
  if (!dist.same_dims(ref)) fail("branch_score: image dimensions differ");
  if (locs.empty()) fail("branch_score: no patch locations");
  // Per-patch subtraction of the (stale-is-fine) reference-zero constant:
  // the constant cancels inside the preference sigmoid, and identical images
  // score an exact 0.
  numeric::Value rz = tape.constant(numeric::Array::scalar(reference_zero_));
  std::vector<numeric::Value> errors, weights;
  errors.reserve(locs.size());
  weights.reserve(locs.size());
  for (const auto& loc : locs) {
    FeaturePair fr = extract_features(tape, extract_patch(ref, loc, cfg_.patch_size));
    FeaturePair fd = extract_features(tape, extract_patch(dist, loc, cfg_.patch_size));
    errors.push_back(tape.sub(patch_error(tape, fr.x, fd.x), rz));
    weights.push_back(patch_weight(tape, fr.y, fd.y));
  }
  return tape.aggregate(errors, weights);
}

std::pair<numeric::Value, numeric::Value> PieAppNet::pair_scores(
    numeric::Tape& tape, const design::Image& a, const design::Image& b,
    const design::Image& ref, std::span<const train::PatchLoc> locs) {
  if (!a.same_dims(ref) || !b.same_dims(ref)) {
    fail("pair_scores: image dimensions differ");
  }
  if (locs.empty()) fail("pair_scores: no patch locations");
  numeric::Value rz = tape.constant(numeric::Array::scalar(reference_zero_));
  std::vector<numeric::Value> ea, wa, eb, wb;
  for (const auto& loc : locs) {
    // the reference FE pass is shared between both branches
    FeaturePair fr = extract_features(tape, extract_patch(ref, loc, cfg_.patch_size));
    FeaturePair fa = extract_features(tape, extract_patch(a, loc, cfg_.patch_size));
    FeaturePair fb = extract_features(tape, extract_patch(b, loc, cfg_.patch_size));
    ea.push_back(tape.sub(patch_error(tape, fr.x, fa.x), rz));
    wa.push_back(patch_weight(tape, fr.y, fa.y));
    eb.push_back(tape.sub(patch_error(tape, fr.x, fb.x), rz));
    wb.push_back(patch_weight(tape, fr.y, fb.y));
  }
  return {tape.aggregate(ea, wa), tape.aggregate(eb, wb)};
}

double PieAppNet::score(const design::Image& dist, const design::Image& ref,
                        std::size_t n_patches, std::uint64_t seed) {
  if (!dist.same_dims(ref)) fail("score: image dimensions differ");
  const auto locs = sample_patch_locations(ref.width, ref.height,
                                           cfg_.patch_size, n_patches, seed);
  std::vector<double> errors, weights;
  errors.reserve(locs.size());
  weights.reserve(locs.size());
  for (const auto& loc : locs) {
    numeric::Tape tape(false);  // per patch, to bound activation memory
    FeaturePair fr = extract_features(tape, extract_patch(ref, loc, cfg_.patch_size));
    FeaturePair fd = extract_features(tape, extract_patch(dist, loc, cfg_.patch_size));
    // calibrating per patch keeps f(R,R) exactly zero; the aggregate of an
    // all-zero error vector is an exact 0 regardless of the weights
    errors.push_back(patch_error(tape, fr.x, fd.x).item() - reference_zero_);
    weights.push_back(patch_weight(tape, fr.y, fd.y).item());
  }
  return aggregate(errors, weights);
}

}  // namespace pieapp::net
