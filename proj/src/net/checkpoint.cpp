// Checkpoint file layout: one JSON header line (format tag, NetConfig,
// parameter names and shapes, reference_zero), then the raw little-endian
// 64-bit floats of every parameter in header order.

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "pieapp/net/config_json.hpp"
#include "pieapp/net/model.hpp"

namespace pieapp::net {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("pieapp-net: checkpoint: " + msg);
}

void swap_if_big_endian(std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)v;
  } else {
    for (double& d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      bits = __builtin_bswap64(bits);
      std::memcpy(&d, &bits, 8);
    }
  }
}

}  // namespace

void PieAppNet::save_checkpoint(const std::string& path) const {
  json params = json::array();
  for (const auto& p : params_) {
    params.push_back(json{{"name", p->name}, {"shape", p->value.shape()}});
  }
  const json header{{"format", "pieapp-checkpoint"},
                    {"version", 1},
                    {"config", to_json(cfg_)},
                    {"reference_zero", reference_zero_},
                    {"params", params}};
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot open " + path);
  os << header.dump() << "\n";
  for (const auto& p : params_) {
    std::vector<double> buf(p->value.data(),
                            p->value.data() + p->value.size());
    swap_if_big_endian(buf);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  if (!os) fail("write failed for " + path);
}

PieAppNet PieAppNet::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open " + path);
  std::string header_line;
  if (!std::getline(is, header_line)) fail("missing header in " + path);
  const json header = json::parse(header_line);
  if (header.at("format").get<std::string>() != "pieapp-checkpoint") {
    fail(path + " is not a checkpoint file");
  }
  if (header.at("version").get<int>() != 1) {
    fail("unsupported checkpoint version in " + path);
  }

  PieAppNet net(net_config_from_json(header.at("config")), 0);
  const json& params = header.at("params");
  if (params.size() != net.params_.size()) {
    fail("parameter count mismatch in " + path);
  }
  for (std::size_t i = 0; i < net.params_.size(); ++i) {
    auto& p = *net.params_[i];
    if (params[i].at("name").get<std::string>() != p.name) {
      fail("parameter name mismatch at index " + std::to_string(i));
    }
    if (params[i].at("shape").get<std::vector<std::size_t>>() !=
        p.value.shape()) {
      fail("parameter shape mismatch for " + p.name);
    }
    std::vector<double> buf(p.value.size());
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (is.gcount() !=
        static_cast<std::streamsize>(buf.size() * sizeof(double))) {
      fail("truncated parameter data in " + path);
    }
    swap_if_big_endian(buf);
    std::copy(buf.begin(), buf.end(), p.value.data());
  }
  net.reference_zero_ = header.at("reference_zero").get<double>();
  return net;
}

}  // namespace pieapp::net
