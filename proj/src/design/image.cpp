#include "pieapp/design/image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pieapp/common/rng.hpp"

namespace pieapp::design {

namespace {
[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("experiment-design: " + msg);
}
}  // namespace

numeric::Array to_planar(const Image& img) {
  numeric::Array out({img.channels, img.height, img.width});
  const std::size_t plane = img.height * img.width;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out[c * plane + y * img.width + x] =
            static_cast<double>(img.at(x, y, c)) / 255.0;
      }
    }
  }
  return out;
}

void save_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) {
    fail("save_image: only 1- or 3-channel images supported");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("save_image: cannot open " + path);
  os << (img.channels == 1 ? "P5" : "P6") << "\n"
     << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) fail("save_image: write failed for " + path);
}

Image load_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("load_image: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P6") {
    fail("load_image: " + path + " is not binary PGM/PPM");
  }
  auto next_token = [&is, &path]() {
    std::string tok;
    for (;;) {
      if (!(is >> tok)) fail("load_image: truncated header in " + path);
      if (tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
  };
  const std::size_t w = std::stoul(next_token());
  const std::size_t h = std::stoul(next_token());
  const std::size_t maxval = std::stoul(next_token());
  if (maxval != 255) fail("load_image: only 8-bit images supported");
  is.get();  // single whitespace after maxval
  Image img(w, h, magic == "P5" ? 1 : 3);
  is.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    fail("load_image: truncated pixel data in " + path);
  }
  return img;
}

Image make_reference_image(std::size_t size, std::size_t channels,
                           std::uint64_t seed) {
  if (channels != 1 && channels != 3) {
    fail("make_reference_image: channels must be 1 or 3");
  }
  rng::Rng r(seed);
  const double pi = 3.14159265358979323846;
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 5; ++i) {
    waves.push_back({r.uniform(0.5, 4.0), r.uniform(0.5, 4.0),
                     r.uniform(0.0, 2.0 * pi), r.uniform(0.04, 0.14)});
  }
  struct Blob {
    double cx, cy, sigma, amp;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 3; ++i) {
    blobs.push_back({r.uniform(0.1, 0.9), r.uniform(0.1, 0.9),
                     r.uniform(0.08, 0.25), r.uniform(-0.25, 0.25)});
  }
  const double gx = r.uniform(-0.15, 0.15);
  const double gy = r.uniform(-0.15, 0.15);

  std::vector<double> chroma(channels, 0.0);
  for (std::size_t c = 1; c < channels; ++c) chroma[c] = r.uniform(-0.1, 0.1);

  Image img(size, size, channels);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      double val = 0.5 + gx * (u - 0.5) + gy * (v - 0.5);
      for (const Wave& wv : waves) {
        val += wv.amp * std::sin(2.0 * pi * (wv.fx * u + wv.fy * v) + wv.phase);
      }
      for (const Blob& bl : blobs) {
        const double dx = u - bl.cx;
        const double dy = v - bl.cy;
        val += bl.amp *
               std::exp(-(dx * dx + dy * dy) / (2.0 * bl.sigma * bl.sigma));
      }
      // keep headroom so noise/contrast distortions rarely clip
      val = 0.12 + 0.76 * std::min(1.0, std::max(0.0, val));
      for (std::size_t c = 0; c < channels; ++c) {
        double cv = std::min(1.0, std::max(0.0, val + chroma[c] * (u - v)));
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(cv * 255.0));
      }
    }
  }
  return img;
}

}  // namespace pieapp::design
