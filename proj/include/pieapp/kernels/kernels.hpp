#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pieapp::kernels {

// Dense double-precision kernels behind the numeric layer. Every entry has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. Elementwise and axpy-style kernels (including the 3x3 convolutions,
// which accumulate each output element in a fixed (c,ky,kx) order) are
// bit-identical across variants. Reduction kernels (dot, sum, matvec,
// conv3x3_bwd_kernel) use per-lane partial sums in the SIMD variant and agree
// with the scalar reference to rounding error only.
struct Backend {
  const char* name;

  // y += a * x
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // y *= a
  void (*scale)(double* y, double a, std::size_t n);
  // z = x + y / z = x - y (z may alias x or y)
  void (*add)(double* z, const double* x, const double* y, std::size_t n);
  void (*sub)(double* z, const double* x, const double* y, std::size_t n);
  // y = max(x, 0)
  void (*relu_fwd)(double* y, const double* x, std::size_t n);
  // dx += dy where x > 0 (subgradient at 0 is 0)
  void (*relu_bwd)(double* dx, const double* x, const double* dy, std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);

  // Row-major W[m][n].
  void (*matvec)(double* y, const double* w, const double* x, std::size_t m,
                 std::size_t n);                    // y = W x
  void (*matvec_t_acc)(double* dx, const double* w, const double* dy,
                       std::size_t m, std::size_t n);  // dx += W^T dy
  void (*outer_acc)(double* dw, const double* dy, const double* x,
                    std::size_t m, std::size_t n);     // dW += dy x^T

  // 3x3 convolution, stride 1, zero same-padding. in: [C,H,W], k: [F,C,3,3],
  // out: [F,H,W]. Padding is realised by clipping the shifted-plane loops, so
  // out-of-image taps are never touched.
  void (*conv3x3_fwd)(double* out, const double* in, const double* k,
                      const double* bias, std::size_t c, std::size_t h,
                      std::size_t w, std::size_t f);
  void (*conv3x3_bwd_input)(double* din, const double* k, const double* dout,
                            std::size_t c, std::size_t h, std::size_t w,
                            std::size_t f);
  void (*conv3x3_bwd_kernel)(double* dk, double* dbias, const double* in,
                             const double* dout, std::size_t c, std::size_t h,
                             std::size_t w, std::size_t f);

  // Adam update, elementwise over n entries. b1t/b2t are beta^t for bias
  // correction at the current step.
  void (*adam_step)(double* p, double* m, double* v, const double* g,
                    std::size_t n, double lr, double b1, double b2, double eps,
                    double b1t, double b2t);
};

const Backend& scalar();

// Active backend. Resolved once: honours the PIEAPP_KERNELS environment
// variable ("scalar" or "avx2") and otherwise picks the best the CPU supports.
const Backend& active();

// Force a backend by name. Returns false (and leaves the selection unchanged)
// if the variant is unknown or unsupported on this CPU.
bool set_active(std::string_view name);

std::vector<std::string> available();

}  // namespace pieapp::kernels
