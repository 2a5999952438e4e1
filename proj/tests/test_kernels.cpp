#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "pieapp/common/rng.hpp"
#include "pieapp/kernels/kernels.hpp"

using pieapp::kernels::Backend;
using pieapp::rng::Rng;

namespace {

std::vector<double> random_reals(Rng& rng, std::size_t n, double lo = -2.0,
                                 double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Integer-valued doubles: every reduction order gives the exact same sum, so
// these expose indexing bugs in the SIMD reductions as hard mismatches.
std::vector<double> random_ints(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = static_cast<double>(static_cast<long>(rng.below(201)) - 100);
  }
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const Backend* avx2_or_null() {
  for (const auto& name : pieapp::kernels::available()) {
    if (name == "avx2") {
      pieapp::kernels::set_active("avx2");
      const Backend* b = &pieapp::kernels::active();
      pieapp::kernels::set_active("scalar");
      return b;
    }
  }
  return nullptr;
}

// Naive zero-padded 3x3 convolution, kept independent of the kernel layer.
void conv3x3_naive(double* out, const double* in, const double* k,
                   const double* bias, std::size_t c, std::size_t h,
                   std::size_t w, std::size_t f) {
  for (std::size_t fo = 0; fo < f; ++fo) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = bias[fo];
        for (std::size_t ci = 0; ci < c; ++ci) {
          for (long ky = 0; ky < 3; ++ky) {
            for (long kx = 0; kx < 3; ++kx) {
              const long iy = static_cast<long>(y) + ky - 1;
              const long ix = static_cast<long>(x) + kx - 1;
              if (iy < 0 || iy >= static_cast<long>(h) || ix < 0 ||
                  ix >= static_cast<long>(w)) {
                continue;
              }
              acc += k[((fo * c + ci) * 3 + ky) * 3 + kx] *
                     in[(ci * h + static_cast<std::size_t>(iy)) * w +
                        static_cast<std::size_t>(ix)];
            }
          }
        }
        out[(fo * h + y) * w + x] = acc;
      }
    }
  }
}

}  // namespace

TEST_CASE("dispatch knows its variants") {
  auto names = pieapp::kernels::available();
  CHECK(std::find(names.begin(), names.end(), "scalar") != names.end());
  CHECK(pieapp::kernels::set_active("scalar"));
  CHECK(std::string(pieapp::kernels::active().name) == "scalar");
  CHECK_FALSE(pieapp::kernels::set_active("bogus"));
  CHECK(std::string(pieapp::kernels::active().name) == "scalar");
}

TEST_CASE("scalar conv3x3_fwd matches a naive padded reference") {
  Rng rng(7);
  const Backend& s = pieapp::kernels::scalar();
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 1 + rng.below(3);
    const std::size_t h = 1 + rng.below(8);
    const std::size_t w = 1 + rng.below(8);
    const std::size_t f = 1 + rng.below(3);
    auto in = random_reals(rng, c * h * w);
    auto k = random_reals(rng, f * c * 9);
    auto bias = random_reals(rng, f);
    std::vector<double> got(f * h * w), want(f * h * w);
    s.conv3x3_fwd(got.data(), in.data(), k.data(), bias.data(), c, h, w, f);
    conv3x3_naive(want.data(), in.data(), k.data(), bias.data(), c, h, w, f);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("avx2 elementwise kernels are bit-identical to scalar") {
  const Backend* a = avx2_or_null();
  if (!a) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  const Backend& s = pieapp::kernels::scalar();
  Rng rng(11);
  for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
    auto x = random_reals(rng, n);
    auto y0 = random_reals(rng, n);
    auto y1 = y0;

    s.axpy(y0.data(), 1.7, x.data(), n);
    a->axpy(y1.data(), 1.7, x.data(), n);
    CHECK(bitwise_equal(y0, y1));

    s.scale(y0.data(), -0.3, n);
    a->scale(y1.data(), -0.3, n);
    CHECK(bitwise_equal(y0, y1));

    std::vector<double> z0(n), z1(n);
    s.add(z0.data(), x.data(), y0.data(), n);
    a->add(z1.data(), x.data(), y1.data(), n);
    CHECK(bitwise_equal(z0, z1));
    s.sub(z0.data(), x.data(), y0.data(), n);
    a->sub(z1.data(), x.data(), y1.data(), n);
    CHECK(bitwise_equal(z0, z1));

    // include negative zero and exact zeros in the relu input
    auto r = random_reals(rng, n);
    if (n > 2) {
      r[0] = 0.0;
      r[1] = -0.0;
    }
    s.relu_fwd(z0.data(), r.data(), n);
    a->relu_fwd(z1.data(), r.data(), n);
    CHECK(bitwise_equal(z0, z1));

    auto dy = random_reals(rng, n);
    auto dx0 = random_reals(rng, n);
    auto dx1 = dx0;
    s.relu_bwd(dx0.data(), r.data(), dy.data(), n);
    a->relu_bwd(dx1.data(), r.data(), dy.data(), n);
    CHECK(bitwise_equal(dx0, dx1));
  }
}

TEST_CASE("avx2 matrix kernels: bitwise where order-preserving") {
  const Backend* a = avx2_or_null();
  if (!a) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  const Backend& s = pieapp::kernels::scalar();
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.below(20);
    const std::size_t n = 1 + rng.below(50);
    auto w = random_reals(rng, m * n);
    auto dy = random_reals(rng, m);
    auto x = random_reals(rng, n);

    auto dx0 = random_reals(rng, n);
    auto dx1 = dx0;
    s.matvec_t_acc(dx0.data(), w.data(), dy.data(), m, n);
    a->matvec_t_acc(dx1.data(), w.data(), dy.data(), m, n);
    CHECK(bitwise_equal(dx0, dx1));

    auto dw0 = random_reals(rng, m * n);
    auto dw1 = dw0;
    s.outer_acc(dw0.data(), dy.data(), x.data(), m, n);
    a->outer_acc(dw1.data(), dy.data(), x.data(), m, n);
    CHECK(bitwise_equal(dw0, dw1));
  }
}

TEST_CASE("avx2 reductions: exact on integers, tight on reals") {
  const Backend* a = avx2_or_null();
  if (!a) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  const Backend& s = pieapp::kernels::scalar();
  Rng rng(31);
  for (std::size_t n : {1u, 4u, 5u, 63u, 256u, 1001u}) {
    auto xi = random_ints(rng, n);
    auto yi = random_ints(rng, n);
    CHECK(s.dot(xi.data(), yi.data(), n) == a->dot(xi.data(), yi.data(), n));
    CHECK(s.sum(xi.data(), n) == a->sum(xi.data(), n));

    auto xr = random_reals(rng, n);
    auto yr = random_reals(rng, n);
    CHECK(s.dot(xr.data(), yr.data(), n) ==
          doctest::Approx(a->dot(xr.data(), yr.data(), n)).epsilon(1e-12));
    CHECK(s.sum(xr.data(), n) ==
          doctest::Approx(a->sum(xr.data(), n)).epsilon(1e-12));
  }

  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t m = 1 + rng.below(16);
    const std::size_t n = 1 + rng.below(40);
    auto wi = random_ints(rng, m * n);
    auto xi = random_ints(rng, n);
    std::vector<double> y0(m), y1(m);
    s.matvec(y0.data(), wi.data(), xi.data(), m, n);
    a->matvec(y1.data(), wi.data(), xi.data(), m, n);
    CHECK(bitwise_equal(y0, y1));

    auto wr = random_reals(rng, m * n);
    auto xr = random_reals(rng, n);
    s.matvec(y0.data(), wr.data(), xr.data(), m, n);
    a->matvec(y1.data(), wr.data(), xr.data(), m, n);
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(y0[i] == doctest::Approx(y1[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("avx2 conv kernels match scalar") {
  const Backend* a = avx2_or_null();
  if (!a) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  const Backend& s = pieapp::kernels::scalar();
  Rng rng(43);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t c = 1 + rng.below(3);
    const std::size_t h = 1 + rng.below(10);
    const std::size_t w = 1 + rng.below(10);
    const std::size_t f = 1 + rng.below(4);
    auto in = random_reals(rng, c * h * w);
    auto k = random_reals(rng, f * c * 9);
    auto bias = random_reals(rng, f);

    // forward and input-backward preserve per-element order: bitwise
    std::vector<double> o0(f * h * w), o1(f * h * w);
    s.conv3x3_fwd(o0.data(), in.data(), k.data(), bias.data(), c, h, w, f);
    a->conv3x3_fwd(o1.data(), in.data(), k.data(), bias.data(), c, h, w, f);
    CHECK(bitwise_equal(o0, o1));

    auto dout = random_reals(rng, f * h * w);
    std::vector<double> di0(c * h * w, 0.0), di1(c * h * w, 0.0);
    s.conv3x3_bwd_input(di0.data(), k.data(), dout.data(), c, h, w, f);
    a->conv3x3_bwd_input(di1.data(), k.data(), dout.data(), c, h, w, f);
    CHECK(bitwise_equal(di0, di1));

    // kernel-backward reduces rows: tolerance on reals, exact on integers
    std::vector<double> dk0(f * c * 9, 0.0), dk1(f * c * 9, 0.0);
    std::vector<double> db0(f, 0.0), db1(f, 0.0);
    s.conv3x3_bwd_kernel(dk0.data(), db0.data(), in.data(), dout.data(), c, h,
                         w, f);
    a->conv3x3_bwd_kernel(dk1.data(), db1.data(), in.data(), dout.data(), c, h,
                          w, f);
    for (std::size_t i = 0; i < dk0.size(); ++i) {
      CHECK(dk0[i] == doctest::Approx(dk1[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < f; ++i) {
      CHECK(db0[i] == doctest::Approx(db1[i]).epsilon(1e-12));
    }

    auto ini = random_ints(rng, c * h * w);
    auto douti = random_ints(rng, f * h * w);
    std::fill(dk0.begin(), dk0.end(), 0.0);
    std::fill(dk1.begin(), dk1.end(), 0.0);
    std::fill(db0.begin(), db0.end(), 0.0);
    std::fill(db1.begin(), db1.end(), 0.0);
    s.conv3x3_bwd_kernel(dk0.data(), db0.data(), ini.data(), douti.data(), c,
                         h, w, f);
    a->conv3x3_bwd_kernel(dk1.data(), db1.data(), ini.data(), douti.data(), c,
                          h, w, f);
    CHECK(bitwise_equal(dk0, dk1));
    CHECK(bitwise_equal(db0, db1));
  }
}

TEST_CASE("avx2 adam_step is bit-identical to scalar") {
  const Backend* a = avx2_or_null();
  if (!a) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  const Backend& s = pieapp::kernels::scalar();
  Rng rng(59);
  for (std::size_t n : {1u, 5u, 64u, 129u}) {
    auto g = random_reals(rng, n);
    auto p0 = random_reals(rng, n);
    auto m0 = random_reals(rng, n, 0.0, 0.5);
    auto v0 = random_reals(rng, n, 0.0, 0.5);
    auto p1 = p0;
    auto m1 = m0;
    auto v1 = v0;
    s.adam_step(p0.data(), m0.data(), v0.data(), g.data(), n, 1e-3, 0.9, 0.999,
                1e-8, 0.9, 0.999);
    a->adam_step(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9,
                 0.999, 1e-8, 0.9, 0.999);
    CHECK(bitwise_equal(p0, p1));
    CHECK(bitwise_equal(m0, m1));
    CHECK(bitwise_equal(v0, v1));
  }
}
