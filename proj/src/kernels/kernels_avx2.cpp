// AVX2 variants. Compiled with -mavx2 only; dispatch.cpp guards selection with
// a runtime CPU check. Elementwise/axpy kernels are bit-identical to the
// scalar reference (mul + add, no FMA, same per-element accumulation order).
// Reductions keep 4 lane partials and fold them in a fixed order, so they
// match scalar only to rounding error.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "conv3x3_impl.hpp"
#include "pieapp/kernels/kernels.hpp"

namespace pieapp::kernels {
namespace {

inline double hsum(__m256d v) {
  // (l0 + l1) + (l2 + l3), fixed order.
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const double l0 = _mm_cvtsd_f64(lo);
  const double l1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  const double l2 = _mm_cvtsd_f64(hi);
  const double l3 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
  return (l0 + l1) + (l2 + l3);
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double* y, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  }
  for (; i < n; ++i) y[i] *= a;
}

void add(double* z, const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void sub(double* z, const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] - y[i];
}

void relu_fwd(double* y, const double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    // x > 0 ? x : 0, matching the scalar branch (so -0.0 and NaN map to +0.0).
    const __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_and_pd(vx, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(double* dx, const double* x, const double* dy, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vdx = _mm256_loadu_pd(dx + i);
    const __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
    const __m256d bumped = _mm256_add_pd(vdx, _mm256_loadu_pd(dy + i));
    // blend keeps dx bits untouched where x <= 0
    _mm256_storeu_pd(dx + i, _mm256_blendv_pd(vdx, bumped, mask));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

void matvec(double* y, const double* w, const double* x, std::size_t m,
            std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot(w + i * n, x, n);
}

void matvec_t_acc(double* dx, const double* w, const double* dy, std::size_t m,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) axpy(dx, dy[i], w + i * n, n);
}

void outer_acc(double* dw, const double* dy, const double* x, std::size_t m,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) axpy(dw + i * n, dy[i], x, n);
}

struct Avx2Ops {
  static void axpy(double* y, double a, const double* x, std::size_t n) {
    kernels::axpy(y, a, x, n);
  }
  static double dot(const double* x, const double* y, std::size_t n) {
    return kernels::dot(x, y, n);
  }
  static double sum(const double* x, std::size_t n) {
    return kernels::sum(x, n);
  }
};

void conv3x3_fwd(double* out, const double* in, const double* k,
                 const double* bias, std::size_t c, std::size_t h,
                 std::size_t w, std::size_t f) {
  detail::conv3x3_fwd_impl<Avx2Ops>(out, in, k, bias, c, h, w, f);
}

void conv3x3_bwd_input(double* din, const double* k, const double* dout,
                       std::size_t c, std::size_t h, std::size_t w,
                       std::size_t f) {
  detail::conv3x3_bwd_input_impl<Avx2Ops>(din, k, dout, c, h, w, f);
}

void conv3x3_bwd_kernel(double* dk, double* dbias, const double* in,
                        const double* dout, std::size_t c, std::size_t h,
                        std::size_t w, std::size_t f) {
  detail::conv3x3_bwd_kernel_impl<Avx2Ops>(dk, dbias, in, dout, c, h, w, f);
}

void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double b1, double b2, double eps, double b1t,
               double b2t) {
  const __m256d vb1 = _mm256_set1_pd(b1);
  const __m256d vb2 = _mm256_set1_pd(b2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - b1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - b2);
  const __m256d vmc = _mm256_set1_pd(1.0 - b1t);
  const __m256d vvc = _mm256_set1_pd(1.0 - b2t);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(v1mb1, vg));
    vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv),
                       _mm256_mul_pd(v1mb2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(vm, vmc);
    const __m256d vhat = _mm256_div_pd(vv, vvc);
    const __m256d step = _mm256_mul_pd(
        vlr, _mm256_div_pd(mhat, _mm256_add_pd(_mm256_sqrt_pd(vhat), veps)));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
    const double mhat = m[i] / (1.0 - b1t);
    const double vhat = v[i] / (1.0 - b2t);
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

const Backend& avx2() {
  static const Backend backend{
      "avx2",        axpy,
      scale,         add,
      sub,           relu_fwd,
      relu_bwd,      dot,
      sum,           matvec,
      matvec_t_acc,  outer_acc,
      conv3x3_fwd,   conv3x3_bwd_input,
      conv3x3_bwd_kernel, adam_step,
  };
  return backend;
}

}  // namespace pieapp::kernels
