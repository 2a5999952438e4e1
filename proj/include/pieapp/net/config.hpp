#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pieapp::net {

// Architecture of the error-estimation network. The feature-extraction
// subnet is a stack of 3x3 conv+ReLU layers with 2x2 max-pooling after every
// even layer; flattened activations at the tap layers (taken after the pool
// when the layer has one) concatenate into the multi-scale feature vector x,
// and the final layer's activation is the weight-path vector y. The default
// is the 11-layer / 5-pool stack; shorter stacks are accepted so miniature
// configurations can be gradient-checked end to end.
struct NetConfig {
  std::vector<std::size_t> conv_widths{8, 8, 16, 16, 32, 32, 64, 64, 128, 128,
                                       128};
  std::vector<std::size_t> concat_taps{2, 4, 6, 8, 10, 11};  // 1-based
  std::size_t hidden_units = 512;
  std::size_t in_channels = 1;
  std::size_t patch_size = 64;
  std::size_t patches_train = 36;
  std::size_t patches_eval = 1024;

  std::size_t n_layers() const { return conv_widths.size(); }
  std::size_t n_pools() const { return conv_widths.size() / 2; }

  // Spatial side length of the activation after layer `layer` (1-based),
  // including that layer's pool when it has one.
  std::size_t spatial_after(std::size_t layer) const {
    return patch_size >> (layer / 2);
  }

  // Length of the concatenated multi-scale feature vector x.
  std::size_t feature_length() const;
  // Length of the last-layer feature vector y.
  std::size_t y_length() const;

  void validate() const;  // throws std::invalid_argument with context
};

}  // namespace pieapp::net
