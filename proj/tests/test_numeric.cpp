#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "pieapp/common/rng.hpp"
#include "pieapp/numeric/array.hpp"
#include "pieapp/numeric/gradcheck.hpp"
#include "pieapp/numeric/scalar_math.hpp"
#include "pieapp/numeric/tape.hpp"

using namespace pieapp::numeric;
using pieapp::rng::Rng;

namespace {

Array random_array(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                   double hi = 1.0) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_CASE("array invariants") {
  CHECK_THROWS(Array({2, 0}));
  CHECK_THROWS(Array({2}, {1.0, 2.0, 3.0}));
  Array a({2, 3});
  CHECK(a.size() == 6);
  CHECK(a.all_finite());
  CHECK_THROWS(a.item());
}

TEST_CASE("conv2d with a delta kernel is the identity") {
  Rng rng(1);
  Array img = random_array(rng, {1, 6, 6});
  Parameter k("k", Array({1, 1, 3, 3}));
  k.value[4] = 1.0;  // centre tap
  Parameter b("b", Array({1}));

  Tape tape(false);
  Value out = tape.conv2d(tape.constant(img), tape.param(k), tape.param(b));
  CHECK(out.value().shape() == img.shape());
  CHECK(std::memcmp(out.value().data(), img.data(),
                    img.size() * sizeof(double)) == 0);
}

TEST_CASE("conv2d on zero input returns the bias per filter") {
  Parameter k("k", Array({2, 1, 3, 3}));
  k.value.fill(0.7);
  Parameter b("b", Array({2}, {1.5, -2.0}));
  Tape tape(false);
  Value out =
      tape.conv2d(tape.constant(Array({1, 4, 4})), tape.param(k), tape.param(b));
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(out.value()[i] == 1.5);
    CHECK(out.value()[16 + i] == -2.0);
  }
}

TEST_CASE("conv2d rejects shape mismatches") {
  Parameter k("k", Array({1, 2, 3, 3}));
  Parameter b("b", Array({1}));
  Tape tape;
  CHECK_THROWS(tape.conv2d(tape.constant(Array({1, 4, 4})), tape.param(k),
                           tape.param(b)));
  Parameter k5(("k5"), Array({1, 1, 3, 3}));
  Parameter bbad("bb", Array({3}));
  CHECK_THROWS(tape.conv2d(tape.constant(Array({1, 4, 4})), tape.param(k5),
                           tape.param(bbad)));
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(2);
  Array img = random_array(rng, {1, 6, 6});
  Parameter in("in", img);
  Parameter k("k", random_array(rng, {2, 1, 3, 3}));
  Parameter b("b", random_array(rng, {2}));
  auto f = [&](Tape& t) {
    return t.square_sum(t.conv2d(t.param(in), t.param(k), t.param(b)));
  };
  auto report = grad_check(f, {&in, &k, &b}, 1e-6, 1e-5);
  CHECK(report.pass);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("relu forward and gradient") {
  Tape tape(false);
  Value out = tape.relu(tape.constant(Array({3}, {-1.0, 0.0, 2.0})));
  CHECK(out.value()[0] == 0.0);
  CHECK(out.value()[1] == 0.0);
  CHECK(out.value()[2] == 2.0);

  // all-negative input: zero output, zero gradient
  Parameter p("p", Array({4}, {-1.0, -0.5, -2.0, -3.0}));
  Tape t2;
  Value o2 = t2.square_sum(t2.relu(t2.param(p)));
  t2.backward(o2);
  CHECK(o2.item() == 0.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.grad[i] == 0.0);

  // away from the kink, FD agrees
  Rng rng(3);
  Parameter q("q", Array({6}));
  for (std::size_t i = 0; i < 6; ++i) {
    double v = rng.uniform(0.1, 1.0);
    q.value[i] = (i % 2 == 0) ? v : -v;
  }
  auto f = [&](Tape& t) { return t.square_sum(t.relu(t.param(q))); };
  CHECK(grad_check(f, {&q}, 1e-6, 1e-5).pass);
}

TEST_CASE("maxpool2 forward, tie policy, gradient") {
  Tape tape(false);
  Value out =
      tape.maxpool2(tape.constant(Array({1, 2, 2}, {1.0, 2.0, 3.0, 4.0})));
  CHECK(out.value().size() == 1);
  CHECK(out.value()[0] == 4.0);

  CHECK_THROWS(tape.maxpool2(tape.constant(Array({1, 3, 4}))));

  // constant input: gradient goes to the first position of each window
  Parameter p("p", Array({1, 2, 2}, {5.0, 5.0, 5.0, 5.0}));
  Tape t2;
  Value o2 = t2.maxpool2(t2.param(p));
  t2.backward(o2);
  CHECK(p.grad[0] == 1.0);
  CHECK(p.grad[1] == 0.0);
  CHECK(p.grad[2] == 0.0);
  CHECK(p.grad[3] == 0.0);

  Rng rng(4);
  Parameter q("q", random_array(rng, {1, 8, 8}));
  auto f = [&](Tape& t) { return t.square_sum(t.maxpool2(t.param(q))); };
  CHECK(grad_check(f, {&q}, 1e-6, 1e-5).pass);
}

TEST_CASE("fully_connected basics and gradient") {
  // identity weights, zero bias
  Parameter w("w", Array({3, 3}));
  w.value[0] = w.value[4] = w.value[8] = 1.0;
  Parameter b("b", Array({3}));
  Array x({3}, {0.3, -0.7, 1.1});
  Tape tape(false);
  Value out = tape.fully_connected(tape.constant(x), tape.param(w), tape.param(b));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.value()[i] == x[i]);

  // zero input: output equals bias
  Parameter b2("b2", Array({3}, {0.5, -1.0, 2.0}));
  Value out2 = tape.fully_connected(tape.constant(Array({3})),
                                    tape.param(w), tape.param(b2));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out2.value()[i] == b2.value[i]);

  CHECK_THROWS(tape.fully_connected(tape.constant(Array({2})), tape.param(w),
                                    tape.param(b)));

  Rng rng(5);
  Parameter win("win", random_array(rng, {4, 6}));
  Parameter bin("bin", random_array(rng, {4}));
  Parameter xin("xin", random_array(rng, {6}));
  auto f = [&](Tape& t) {
    return t.square_sum(
        t.fully_connected(t.param(xin), t.param(win), t.param(bin)));
  };
  CHECK(grad_check(f, {&win, &bin, &xin}, 1e-6, 1e-5).pass);
}

TEST_CASE("concat values and gradient routing") {
  Tape tape(false);
  Value out = tape.concat({tape.constant(Array({2}, {1.0, 2.0})),
                           tape.constant(Array({1}, {3.0}))});
  CHECK(out.value().size() == 3);
  CHECK(out.value()[0] == 1.0);
  CHECK(out.value()[2] == 3.0);

  Value single = tape.concat({tape.constant(Array({2}, {4.0, 5.0}))});
  CHECK(single.value()[1] == 5.0);

  CHECK_THROWS(tape.concat({}));

  Rng rng(6);
  Parameter a("a", random_array(rng, {2, 3}));
  Parameter b("b", random_array(rng, {4}));
  auto f = [&](Tape& t) {
    return t.square_sum(t.concat({t.param(a), t.param(b)}));
  };
  CHECK(grad_check(f, {&a, &b}, 1e-6, 1e-5).pass);

  // gradient slices route back exactly: d(sum of squares)/da_i == 2 a_i
  a.zero_grad();
  b.zero_grad();
  Tape t2;
  Value o2 = t2.square_sum(t2.concat({t2.param(a), t2.param(b)}));
  t2.backward(o2);
  for (std::size_t i = 0; i < a.value.size(); ++i) {
    CHECK(a.grad[i] == 2.0 * a.value[i]);
  }
  for (std::size_t i = 0; i < b.value.size(); ++i) {
    CHECK(b.grad[i] == 2.0 * b.value[i]);
  }
}

TEST_CASE("grad_check exact cases") {
  // f(x) = x^2 at x = 3: gradient exactly 6
  Parameter x("x", Array::scalar(3.0));
  x.zero_grad();
  Tape tape;
  Value out = tape.squared_error(tape.param(x), 0.0);
  tape.backward(out);
  CHECK(x.grad[0] == 6.0);

  // sigmoid at 0: gradient exactly 0.25
  Parameter s("s", Array::scalar(0.0));
  s.zero_grad();
  Tape t2;
  Value p = t2.preference(t2.constant(Array::scalar(0.0)), t2.param(s));
  t2.backward(p);
  CHECK(p.item() == 0.5);
  CHECK(s.grad[0] == 0.25);
}

TEST_CASE("grad_check rejects non-scalar outputs") {
  Parameter x("x", Array({2}, {1.0, 2.0}));
  auto f = [&](Tape& t) { return t.relu(t.param(x)); };
  CHECK_THROWS(grad_check(f, {&x}, 1e-6, 1e-5));
}

TEST_CASE("preference op: antisymmetry and values") {
  Tape tape(false);
  auto pref = [&](double a, double b) {
    return tape
        .preference(tape.constant(Array::scalar(a)),
                    tape.constant(Array::scalar(b)))
        .item();
  };
  CHECK(pref(0.0, 0.0) == 0.5);
  CHECK(pref(2.541, 0.520) == doctest::Approx(0.117).epsilon(5e-3));
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-10.0, 10.0);
    const double b = rng.uniform(-10.0, 10.0);
    CHECK(pref(a, b) + pref(b, a) == 1.0);  // exact by construction
  }
}

TEST_CASE("aggregate op") {
  Tape tape(false);
  auto sc = [&](double v) { return tape.constant(Array::scalar(v)); };
  Value eq = tape.aggregate({sc(1.0), sc(2.0), sc(3.0)},
                            {sc(2.0), sc(2.0), sc(2.0)});
  CHECK(eq.item() == doctest::Approx(2.0).epsilon(1e-15));
  Value wt = tape.aggregate({sc(0.0), sc(4.0)}, {sc(1.0), sc(3.0)});
  CHECK(wt.item() == 3.0);
  CHECK_THROWS(tape.aggregate({}, {}));
  CHECK_THROWS(tape.aggregate({sc(1.0)}, {sc(0.0)}));
  CHECK_THROWS(tape.aggregate({sc(1.0)}, {sc(-2.0)}));
}

TEST_CASE("forward pass is deterministic") {
  Rng rng(9);
  Array img = random_array(rng, {2, 8, 8});
  Parameter k("k", random_array(rng, {3, 2, 3, 3}));
  Parameter b("b", random_array(rng, {3}));
  auto run = [&]() {
    Tape t(false);
    Value v = t.maxpool2(t.relu(t.conv2d(t.constant(img), t.param(k), t.param(b))));
    std::vector<double> out(v.value().data(), v.value().data() + v.value().size());
    return out;
  };
  auto a = run();
  auto c = run();
  CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("randomized composed graphs pass the finite-difference oracle") {
  // 100 random small configurations of the full op set
  Rng rng(10);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + rng.below(2);
    const std::size_t f = 1 + rng.below(3);
    const std::size_t hw = 4 + 2 * rng.below(2);  // 4 or 6
    Parameter in("in", random_array(rng, {c, hw, hw}));
    Parameter k("k", random_array(rng, {f, c, 3, 3}, -0.6, 0.6));
    Parameter b("b", random_array(rng, {f}, -0.2, 0.2));
    const std::size_t flat = f * (hw / 2) * (hw / 2);
    const std::size_t m = 1 + rng.below(3);
    Parameter w("w", random_array(rng, {m, flat}, -0.5, 0.5));
    Parameter wb("wb", random_array(rng, {m}, -0.2, 0.2));
    auto fn = [&](Tape& t) {
      Value conv = t.conv2d(t.param(in), t.param(k), t.param(b));
      Value pooled = t.maxpool2(t.relu(conv));
      Value feats = t.concat({pooled});
      Value fc = t.fully_connected(feats, t.param(w), t.param(wb));
      return t.square_sum(fc);
    };
    auto report = grad_check(fn, {&in, &k, &b, &w, &wb}, 1e-6, 1e-5);
    if (!report.pass) ++failures;
  }
  CHECK(failures == 0);
}
