#pragma once

#include "json.hpp"
#include "pieapp/net/config.hpp"

namespace pieapp::net {

inline nlohmann::json to_json(const NetConfig& c) {
  return nlohmann::json{{"conv_widths", c.conv_widths},
                        {"concat_taps", c.concat_taps},
                        {"hidden_units", c.hidden_units},
                        {"in_channels", c.in_channels},
                        {"patch_size", c.patch_size},
                        {"patches_train", c.patches_train},
                        {"patches_eval", c.patches_eval}};
}

inline NetConfig net_config_from_json(const nlohmann::json& j) {
  NetConfig c;
  c.conv_widths = j.at("conv_widths").get<std::vector<std::size_t>>();
  c.concat_taps = j.at("concat_taps").get<std::vector<std::size_t>>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.patch_size = j.at("patch_size").get<std::size_t>();
  c.patches_train = j.at("patches_train").get<std::size_t>();
  c.patches_eval = j.at("patches_eval").get<std::size_t>();
  return c;
}

}  // namespace pieapp::net
