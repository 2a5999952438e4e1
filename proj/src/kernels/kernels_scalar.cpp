#include <cmath>
#include <cstddef>

#include "conv3x3_impl.hpp"
#include "pieapp/kernels/kernels.hpp"

namespace pieapp::kernels {
namespace {

void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* y, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

void add(double* z, const double* x, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void sub(double* z, const double* x, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - y[i];
}

void relu_fwd(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(double* dx, const double* x, const double* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
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

struct ScalarOps {
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
  detail::conv3x3_fwd_impl<ScalarOps>(out, in, k, bias, c, h, w, f);
}

void conv3x3_bwd_input(double* din, const double* k, const double* dout,
                       std::size_t c, std::size_t h, std::size_t w,
                       std::size_t f) {
  detail::conv3x3_bwd_input_impl<ScalarOps>(din, k, dout, c, h, w, f);
}

void conv3x3_bwd_kernel(double* dk, double* dbias, const double* in,
                        const double* dout, std::size_t c, std::size_t h,
                        std::size_t w, std::size_t f) {
  detail::conv3x3_bwd_kernel_impl<ScalarOps>(dk, dbias, in, dout, c, h, w, f);
}

void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double b1, double b2, double eps, double b1t,
               double b2t) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
    const double mhat = m[i] / (1.0 - b1t);
    const double vhat = v[i] / (1.0 - b2t);
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

const Backend& scalar() {
  static const Backend backend{
      "scalar",      axpy,
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
