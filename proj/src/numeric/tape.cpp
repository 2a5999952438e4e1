#include "pieapp/numeric/tape.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "pieapp/kernels/kernels.hpp"
#include "pieapp/numeric/scalar_math.hpp"

namespace pieapp::numeric {

namespace {
const kernels::Backend& K() { return kernels::active(); }
}  // namespace

void Tape::require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(std::string("numeric-core: ") + msg);
}

Value Tape::make(Array value, bool needs_grad) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.grad = Array(n.owned.shape());
  nodes_.push_back(std::move(n));
  return Value(&nodes_.back());
}

Value Tape::constant(Array v) { return make(std::move(v), false); }

Value Tape::input(Array v) { return make(std::move(v), true); }

Value Tape::param(Parameter& p) {
  Node n;
  n.view = &p.value;
  n.needs_grad = record_;
  if (n.needs_grad) n.grad = Array(p.value.shape());
  nodes_.push_back(std::move(n));
  Node* node = &nodes_.back();
  if (node->needs_grad) {
    Parameter* pp = &p;
    GradSink* sink = sink_;
    node->back = [node, pp, sink]() {
      Array* dst = nullptr;
      if (sink) {
        auto [it, inserted] = sink->try_emplace(pp, Array(pp->value.shape()));
        dst = &it->second;
      } else {
        dst = &pp->grad;
      }
      K().axpy(dst->data(), 1.0, node->grad.data(), node->grad.size());
    };
  }
  return Value(node);
}

Value Tape::conv2d(Value in, Value kernel, Value bias) {
  Node* xn = in.node_;
  Node* kn = kernel.node_;
  Node* bn = bias.node_;
  const Array& x = xn->val();
  const Array& k = kn->val();
  const Array& b = bn->val();
  require(x.shape().size() == 3, "conv2d: input must be [C,H,W]");
  require(k.shape().size() == 4 && k.shape()[2] == 3 && k.shape()[3] == 3,
          "conv2d: kernel must be [F,C,3,3]");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t f = k.shape()[0];
  require(k.shape()[1] == c, "conv2d: kernel channel count mismatch");
  require(b.shape().size() == 1 && b.shape()[0] == f,
          "conv2d: bias must be [F]");

  Array out({f, h, w});
  K().conv3x3_fwd(out.data(), x.data(), k.data(), b.data(), c, h, w, f);
  const bool ng = xn->needs_grad || kn->needs_grad || bn->needs_grad;
  Value v = make(std::move(out), ng);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [xn, kn, bn, on, c, h, w, f]() {
      if (kn->needs_grad || bn->needs_grad) {
        // dbias falls out of the same kernel; route it through a scratch
        // buffer when only one of the two needs it.
        Array scratch_k, scratch_b;
        double* dk = kn->needs_grad ? kn->grad.data() : nullptr;
        double* db = bn->needs_grad ? bn->grad.data() : nullptr;
        if (!dk) {
          scratch_k = Array(kn->val().shape());
          dk = scratch_k.data();
        }
        if (!db) {
          scratch_b = Array(bn->val().shape());
          db = scratch_b.data();
        }
        K().conv3x3_bwd_kernel(dk, db, xn->val().data(), on->grad.data(), c, h,
                               w, f);
      }
      if (xn->needs_grad) {
        K().conv3x3_bwd_input(xn->grad.data(), kn->val().data(),
                              on->grad.data(), c, h, w, f);
      }
    };
  }
  return v;
}

Value Tape::relu(Value x) {
  Node* xn = x.node_;
  Array out(xn->val().shape());
  K().relu_fwd(out.data(), xn->val().data(), out.size());
  Value v = make(std::move(out), xn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [xn, on]() {
      K().relu_bwd(xn->grad.data(), xn->val().data(), on->grad.data(),
                   on->grad.size());
    };
  }
  return v;
}

Value Tape::maxpool2(Value x) {
  Node* xn = x.node_;
  const Array& in = xn->val();
  require(in.shape().size() == 3, "maxpool2: input must be [C,H,W]");
  const std::size_t c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  require(h % 2 == 0 && w % 2 == 0,
          "maxpool2: spatial dimensions must be even");
  const std::size_t oh = h / 2, ow = w / 2;
  Array out({c, oh, ow});
  std::vector<std::uint32_t> argmax(c * oh * ow);
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* ip = in.data() + ci * h * w;
    double* op = out.data() + ci * oh * ow;
    std::uint32_t* ap = argmax.data() + ci * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        // window scanned in row-major order; ties keep the first maximum
        std::size_t best = (2 * y) * w + 2 * xx;
        double bv = ip[best];
        const std::size_t cand[3] = {(2 * y) * w + 2 * xx + 1,
                                     (2 * y + 1) * w + 2 * xx,
                                     (2 * y + 1) * w + 2 * xx + 1};
        for (std::size_t idx : cand) {
          if (ip[idx] > bv) {
            bv = ip[idx];
            best = idx;
          }
        }
        op[y * ow + xx] = bv;
        ap[y * ow + xx] = static_cast<std::uint32_t>(best);
      }
    }
  }
  Value v = make(std::move(out), xn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [xn, on, argmax = std::move(argmax), c, h, w, oh, ow]() {
      for (std::size_t ci = 0; ci < c; ++ci) {
        double* dip = xn->grad.data() + ci * h * w;
        const double* dop = on->grad.data() + ci * oh * ow;
        const std::uint32_t* ap = argmax.data() + ci * oh * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) dip[ap[i]] += dop[i];
      }
    };
  }
  return v;
}

Value Tape::fully_connected(Value x, Value weights, Value bias) {
  Node* xn = x.node_;
  Node* wn = weights.node_;
  Node* bn = bias.node_;
  const Array& xv = xn->val();
  const Array& wv = wn->val();
  const Array& bv = bn->val();
  require(wv.shape().size() == 2, "fully_connected: weights must be [M,N]");
  const std::size_t m = wv.shape()[0], n = wv.shape()[1];
  require(xv.size() == n, "fully_connected: input length mismatch");
  require(bv.shape().size() == 1 && bv.shape()[0] == m,
          "fully_connected: bias must be [M]");

  Array out({m});
  K().matvec(out.data(), wv.data(), xv.data(), m, n);
  K().add(out.data(), out.data(), bv.data(), m);
  const bool ng = xn->needs_grad || wn->needs_grad || bn->needs_grad;
  Value v = make(std::move(out), ng);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [xn, wn, bn, on, m, n]() {
      if (xn->needs_grad) {
        K().matvec_t_acc(xn->grad.data(), wn->val().data(), on->grad.data(), m,
                         n);
      }
      if (wn->needs_grad) {
        K().outer_acc(wn->grad.data(), on->grad.data(), xn->val().data(), m,
                      n);
      }
      if (bn->needs_grad) {
        K().axpy(bn->grad.data(), 1.0, on->grad.data(), m);
      }
    };
  }
  return v;
}

Value Tape::concat(const std::vector<Value>& xs) {
  require(!xs.empty(), "concat: empty input list");
  std::size_t total = 0;
  bool ng = false;
  for (const Value& x : xs) {
    total += x.node_->val().size();
    ng = ng || x.node_->needs_grad;
  }
  Array out({total});
  std::size_t off = 0;
  for (const Value& x : xs) {
    const Array& v = x.node_->val();
    std::copy(v.data(), v.data() + v.size(), out.data() + off);
    off += v.size();
  }
  Value v = make(std::move(out), ng);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    std::vector<Node*> parents;
    parents.reserve(xs.size());
    for (const Value& x : xs) parents.push_back(x.node_);
    on->back = [on, parents = std::move(parents)]() {
      std::size_t off = 0;
      for (Node* p : parents) {
        const std::size_t sz = p->val().size();
        if (p->needs_grad) {
          K().axpy(p->grad.data(), 1.0, on->grad.data() + off, sz);
        }
        off += sz;
      }
    };
  }
  return v;
}

Value Tape::sub(Value a, Value b) {
  Node* an = a.node_;
  Node* bn = b.node_;
  require(an->val().same_shape(bn->val()), "sub: shape mismatch");
  Array out(an->val().shape());
  K().sub(out.data(), an->val().data(), bn->val().data(), out.size());
  Value v = make(std::move(out), an->needs_grad || bn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [an, bn, on]() {
      if (an->needs_grad) {
        K().axpy(an->grad.data(), 1.0, on->grad.data(), on->grad.size());
      }
      if (bn->needs_grad) {
        K().axpy(bn->grad.data(), -1.0, on->grad.data(), on->grad.size());
      }
    };
  }
  return v;
}

Value Tape::add(Value a, Value b) {
  Node* an = a.node_;
  Node* bn = b.node_;
  require(an->val().same_shape(bn->val()), "add: shape mismatch");
  Array out(an->val().shape());
  K().add(out.data(), an->val().data(), bn->val().data(), out.size());
  Value v = make(std::move(out), an->needs_grad || bn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [an, bn, on]() {
      if (an->needs_grad) {
        K().axpy(an->grad.data(), 1.0, on->grad.data(), on->grad.size());
      }
      if (bn->needs_grad) {
        K().axpy(bn->grad.data(), 1.0, on->grad.data(), on->grad.size());
      }
    };
  }
  return v;
}

Value Tape::scale(Value a, double c) {
  Node* an = a.node_;
  Array out(an->val().shape());
  std::copy(an->val().data(), an->val().data() + out.size(), out.data());
  K().scale(out.data(), c, out.size());
  Value v = make(std::move(out), an->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [an, on, c]() {
      K().axpy(an->grad.data(), c, on->grad.data(), on->grad.size());
    };
  }
  return v;
}

Value Tape::square_sum(Value a) {
  Node* an = a.node_;
  const double s = K().dot(an->val().data(), an->val().data(), an->val().size());
  Value v = make(Array::scalar(s), an->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [an, on]() {
      K().axpy(an->grad.data(), 2.0 * on->grad[0], an->val().data(),
               an->val().size());
    };
  }
  return v;
}

Value Tape::preference(Value s_a, Value s_b) {
  Node* an = s_a.node_;
  Node* bn = s_b.node_;
  require(an->val().size() == 1 && bn->val().size() == 1,
          "preference: scores must be scalars");
  const double p = preference_sigmoid(an->val()[0], bn->val()[0]);
  Value v = make(Array::scalar(p), an->needs_grad || bn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [an, bn, on, p]() {
      const double d = p * (1.0 - p) * on->grad[0];
      if (an->needs_grad) an->grad[0] -= d;
      if (bn->needs_grad) bn->grad[0] += d;
    };
  }
  return v;
}

Value Tape::softplus_plus(Value x, double eps_add) {
  Node* xn = x.node_;
  require(xn->val().size() == 1, "softplus_plus: input must be scalar");
  const double xv = xn->val()[0];
  Value v = make(Array::scalar(softplus(xv) + eps_add), xn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [xn, on, xv]() {
      if (xn->needs_grad) xn->grad[0] += logistic(xv) * on->grad[0];
    };
  }
  return v;
}

Value Tape::aggregate(const std::vector<Value>& errors,
                      const std::vector<Value>& weights) {
  require(!errors.empty(), "aggregate: empty input");
  require(errors.size() == weights.size(),
          "aggregate: errors/weights length mismatch");
  double sw = 0.0, sws = 0.0;
  bool ng = false;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double s = errors[i].node_->val().item();
    const double w = weights[i].node_->val().item();
    require(w > 0.0, "aggregate: weights must be positive");
    sw += w;
    sws += w * s;
    ng = ng || errors[i].node_->needs_grad || weights[i].node_->needs_grad;
  }
  const double out = sws / sw;
  Value v = make(Array::scalar(out), ng);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    std::vector<Node*> en, wn;
    en.reserve(errors.size());
    wn.reserve(weights.size());
    for (const Value& e : errors) en.push_back(e.node_);
    for (const Value& w : weights) wn.push_back(w.node_);
    on->back = [on, en = std::move(en), wn = std::move(wn), sw, out]() {
      const double g = on->grad[0];
      for (std::size_t i = 0; i < en.size(); ++i) {
        const double w = wn[i]->val()[0];
        if (en[i]->needs_grad) en[i]->grad[0] += g * w / sw;
        if (wn[i]->needs_grad) {
          wn[i]->grad[0] += g * (en[i]->val()[0] - out) / sw;
        }
      }
    };
  }
  return v;
}

Value Tape::squared_error(Value pred, double label) {
  Node* pn = pred.node_;
  require(pn->val().size() == 1, "squared_error: prediction must be scalar");
  const double diff = pn->val()[0] - label;
  Value v = make(Array::scalar(diff * diff), pn->needs_grad);
  if (v.node_->needs_grad) {
    Node* on = v.node_;
    on->back = [pn, on, diff]() {
      if (pn->needs_grad) pn->grad[0] += 2.0 * diff * on->grad[0];
    };
  }
  return v;
}

void Tape::backward(Value out) {
  require(record_, "backward: tape was created without recording");
  require(out.node_ != nullptr, "backward: empty value");
  require(out.node_->val().size() == 1, "backward: output must be scalar");
  require(out.node_->needs_grad,
          "backward: output does not depend on any differentiable leaf");
  out.node_->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->needs_grad && it->back) it->back();
  }
}

}  // namespace pieapp::numeric
