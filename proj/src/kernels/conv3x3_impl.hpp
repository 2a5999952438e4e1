#pragma once

#include <cstddef>
#include <cstdlib>

// Shared loop structure for the 3x3 stride-1 zero-padded convolution kernels.
// The padding is realised by clipping each (ky,kx) shift to the overlapping
// rectangle, so the inner op is always a contiguous row axpy/dot. Each output
// element accumulates its (c,ky,kx) terms in the same fixed order for every
// Ops instantiation; variants differ only in how a row is traversed.
namespace pieapp::kernels::detail {

struct Shift {
  long dy, dx;
  std::size_t y0, y1;   // valid output rows
  std::size_t x0, len;  // valid output columns
  std::size_t ix0;      // first input column, = x0 + dx (always >= 0)

  std::size_t iy(std::size_t y) const {
    return static_cast<std::size_t>(static_cast<long>(y) + dy);
  }
};

inline Shift make_shift(std::size_t ky, std::size_t kx, std::size_t h,
                        std::size_t w) {
  Shift s;
  s.dy = static_cast<long>(ky) - 1;
  s.dx = static_cast<long>(kx) - 1;
  s.y0 = s.dy < 0 ? static_cast<std::size_t>(-s.dy) : 0;
  s.y1 = h - (s.dy > 0 ? static_cast<std::size_t>(s.dy) : 0);
  s.x0 = s.dx < 0 ? static_cast<std::size_t>(-s.dx) : 0;
  s.len = w - static_cast<std::size_t>(std::labs(s.dx));
  s.ix0 = static_cast<std::size_t>(static_cast<long>(s.x0) + s.dx);
  return s;
}

template <class Ops>
void conv3x3_fwd_impl(double* out, const double* in, const double* k,
                      const double* bias, std::size_t c, std::size_t h,
                      std::size_t w, std::size_t f) {
  const std::size_t plane = h * w;
  for (std::size_t fo = 0; fo < f; ++fo) {
    double* op = out + fo * plane;
    const double b = bias[fo];
    for (std::size_t i = 0; i < plane; ++i) op[i] = b;
  }
  for (std::size_t fo = 0; fo < f; ++fo) {
    double* op = out + fo * plane;
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double* ip = in + ci * plane;
      const double* kfc = k + (fo * c + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double wgt = kfc[ky * 3 + kx];
          if (wgt == 0.0) continue;
          const Shift s = make_shift(ky, kx, h, w);
          for (std::size_t y = s.y0; y < s.y1; ++y) {
            Ops::axpy(op + y * w + s.x0, wgt, ip + s.iy(y) * w + s.ix0, s.len);
          }
        }
      }
    }
  }
}

template <class Ops>
void conv3x3_bwd_input_impl(double* din, const double* k, const double* dout,
                            std::size_t c, std::size_t h, std::size_t w,
                            std::size_t f) {
  const std::size_t plane = h * w;
  for (std::size_t fo = 0; fo < f; ++fo) {
    const double* gp = dout + fo * plane;
    for (std::size_t ci = 0; ci < c; ++ci) {
      double* dp = din + ci * plane;
      const double* kfc = k + (fo * c + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double wgt = kfc[ky * 3 + kx];
          if (wgt == 0.0) continue;
          const Shift s = make_shift(ky, kx, h, w);
          for (std::size_t y = s.y0; y < s.y1; ++y) {
            Ops::axpy(dp + s.iy(y) * w + s.ix0, wgt, gp + y * w + s.x0, s.len);
          }
        }
      }
    }
  }
}

template <class Ops>
void conv3x3_bwd_kernel_impl(double* dk, double* dbias, const double* in,
                             const double* dout, std::size_t c, std::size_t h,
                             std::size_t w, std::size_t f) {
  const std::size_t plane = h * w;
  for (std::size_t fo = 0; fo < f; ++fo) {
    const double* gp = dout + fo * plane;
    dbias[fo] += Ops::sum(gp, plane);
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double* ip = in + ci * plane;
      double* dkfc = dk + (fo * c + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const Shift s = make_shift(ky, kx, h, w);
          double acc = 0.0;
          for (std::size_t y = s.y0; y < s.y1; ++y) {
            acc += Ops::dot(gp + y * w + s.x0, ip + s.iy(y) * w + s.ix0, s.len);
          }
          dkfc[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

}  // namespace pieapp::kernels::detail
