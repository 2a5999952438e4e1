#include "pieapp/design/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pieapp::design {

namespace {

struct Planes {
  std::size_t w = 0, h = 0, c = 0;
  std::vector<double> v;  // planar [C][H][W]
};

Planes to_planes(const Image& img) {
  Planes p;
  p.w = img.width;
  p.h = img.height;
  p.c = img.channels;
  p.v.resize(p.w * p.h * p.c);
  for (std::size_t ch = 0; ch < p.c; ++ch) {
    for (std::size_t y = 0; y < p.h; ++y) {
      for (std::size_t x = 0; x < p.w; ++x) {
        p.v[(ch * p.h + y) * p.w + x] =
            static_cast<double>(img.at(x, y, ch)) / 255.0;
      }
    }
  }
  return p;
}

Planes downsample2(const Planes& in) {
  Planes out;
  out.c = in.c;
  out.w = (in.w + 1) / 2;
  out.h = (in.h + 1) / 2;
  out.v.resize(out.w * out.h * out.c);
  for (std::size_t ch = 0; ch < in.c; ++ch) {
    for (std::size_t y = 0; y < out.h; ++y) {
      for (std::size_t x = 0; x < out.w; ++x) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t sy = 2 * y + dy;
            const std::size_t sx = 2 * x + dx;
            if (sy >= in.h || sx >= in.w) continue;
            acc += in.v[(ch * in.h + sy) * in.w + sx];
            ++n;
          }
        }
        out.v[(ch * out.h + y) * out.w + x] = acc / static_cast<double>(n);
      }
    }
  }
  return out;
}

double rmse(const Planes& a, const Planes& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.v.size()));
}

}  // namespace

double oracle_score(const Image& dist, const Image& ref) {
  if (!dist.same_dims(ref)) {
    throw std::runtime_error(
        "experiment-design: oracle_score: dimension mismatch");
  }
  Planes a = to_planes(dist);
  Planes b = to_planes(ref);
  double total = rmse(a, b);
  for (int scale = 1; scale < 3; ++scale) {
    a = downsample2(a);
    b = downsample2(b);
    total += rmse(a, b);
  }
  return total / 3.0;
}

}  // namespace pieapp::design
