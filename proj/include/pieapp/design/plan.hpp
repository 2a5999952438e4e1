#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pieapp/design/distortion.hpp"
#include "pieapp/design/image.hpp"

namespace pieapp::design {

struct DesignConfig {
  std::size_t image_size = 64;
  std::size_t channels = 1;
  std::vector<DistortionFamily> train_families{
      DistortionFamily::gaussian_noise, DistortionFamily::box_blur,
      DistortionFamily::quantize};
  std::vector<DistortionFamily> test_families{
      DistortionFamily::contrast_scale, DistortionFamily::pixelate};
  double strength_min = 0.2;
  double strength_max = 1.0;
};

struct PlanItem {
  std::string id;
  std::string ref_id;
  DistortionSpec spec;
  std::uint64_t seed = 0;
};

struct ComparisonGroup {
  enum class Kind { inter, intra };
  std::string id;
  std::string ref_id;
  Kind kind = Kind::inter;
  std::vector<std::string> item_ids;  // 15 for inter, 3 for intra
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // item indices
  std::vector<std::uint8_t> queried;  // parallel to pairs

  std::size_t n_queried() const;
};

struct ComparisonPlan {
  std::vector<std::string> ref_ids;
  std::vector<std::uint64_t> ref_seeds;
  std::vector<PlanItem> items;
  std::vector<ComparisonGroup> groups;
  int responses_per_pair = 40;
  std::uint64_t seed = 0;
  DesignConfig config;

  std::size_t n_pairs() const;
  std::size_t n_queried() const;
  std::size_t n_pairs(ComparisonGroup::Kind kind) const;
  const PlanItem& item(const std::string& id) const;
};

// Per reference: 4 inter-type groups (15 items each, exhaustive 105 pairs)
// and 21 intra-type groups (3 items at evenly spaced strengths, 3 pairs).
// 160 references reproduce the 77,280 = 67,200 + 10,080 training pairs.
ComparisonPlan build_training_plan(std::size_t n_refs, std::uint64_t seed,
                                   const DesignConfig& config = {});

// One 15-item group per reference, exhaustive pairs, test families only.
// 40 references reproduce the 4,200 test pairs.
ComparisonPlan build_test_plan(std::size_t n_refs, std::uint64_t seed,
                               const DesignConfig& config = {});

// Pair subset over n items whose comparison graph is connected with every
// item in at least k comparisons: a circulant design over a seeded
// permutation. For n=15, k=10 this yields exactly 75 pairs (10-regular).
std::vector<std::pair<std::size_t, std::size_t>> sparse_pair_selection(
    std::size_t n_items, std::size_t k, std::uint64_t seed);

// Marks unselected pairs of every 15-item inter group as unqueried.
void apply_sparse_design(ComparisonPlan& plan, std::size_t k);

struct ResponseRecord {
  std::string group_id;
  std::string ref_id;
  std::string id_a;
  std::string id_b;
  int n_responses = 0;
  int n_prefer_a = 0;
};

// Binomial(n, bt_probability(s_a, s_b)) per queried pair, with a per-pair
// derived seed so group order does not matter.
std::vector<ResponseRecord> simulate_responses(
    const ComparisonPlan& plan,
    const std::unordered_map<std::string, double>& scores, int n,
    std::uint64_t seed);

// Rendered reference and distorted images for a plan.
class ImageStore {
 public:
  static ImageStore render(const ComparisonPlan& plan);
  static ImageStore from_dir(const ComparisonPlan& plan,
                             const std::string& dir);

  const Image& ref(const std::string& ref_id) const;
  const Image& item(const std::string& item_id) const;
  void save_all(const std::string& dir) const;

 private:
  std::unordered_map<std::string, Image> refs_;
  std::unordered_map<std::string, Image> items_;
};

// JSONL serialisation. One record per line: a plan header, then refs,
// items, and groups; responses one record per pair.
void save_plan(const ComparisonPlan& plan, const std::string& path);
ComparisonPlan load_plan(const std::string& path);
void save_responses(const std::vector<ResponseRecord>& responses,
                    const std::string& path);
std::vector<ResponseRecord> load_responses(const std::string& path);

}  // namespace pieapp::design
