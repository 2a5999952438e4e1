#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "pieapp/numeric/array.hpp"

namespace pieapp::numeric {

class Tape;

// Handle to a tape node. Valid for the lifetime of the owning Tape.
class Value {
 public:
  Value() = default;
  const Array& value() const;
  const Array& grad() const;
  double item() const { return value().item(); }

 private:
  friend class Tape;
  struct Node* node_ = nullptr;
  explicit Value(Node* n) : node_(n) {}
};

struct Node {
  Array owned;
  const Array* view = nullptr;  // set for parameter leaves; avoids copies
  Array grad;                   // allocated only when needs_grad
  std::function<void()> back;
  bool needs_grad = false;

  const Array& val() const { return view ? *view : owned; }
};

// Reverse-mode tape over exactly the operation set the network needs.
// Creation order is a valid topological order, so backward() is a single
// reverse sweep. Gradients of Parameter leaves accumulate into
// Parameter::grad (or into a supplied sink map, used by the batch-parallel
// trainer to keep reductions in a fixed order).
class Tape {
 public:
  using GradSink = std::unordered_map<Parameter*, Array>;

  explicit Tape(bool record = true, GradSink* sink = nullptr)
      : record_(record), sink_(sink) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Value constant(Array v);
  Value input(Array v);  // differentiable (used by gradient checks)
  Value param(Parameter& p);

  // Layer ops.
  Value conv2d(Value in, Value kernel, Value bias);
  Value relu(Value x);
  Value maxpool2(Value x);
  Value fully_connected(Value x, Value weights, Value bias);
  Value concat(const std::vector<Value>& xs);

  // Elementwise / scalar ops.
  Value sub(Value a, Value b);
  Value add(Value a, Value b);
  Value scale(Value a, double c);
  Value square_sum(Value a);  // sum of squares -> scalar
  Value preference(Value s_a, Value s_b);  // BT sigmoid, scalar
  Value softplus_plus(Value x, double eps_add);  // scalar, strictly positive
  Value aggregate(const std::vector<Value>& errors,
                  const std::vector<Value>& weights);  // weighted mean
  Value squared_error(Value pred, double label);

  // Seeds d(out)/d(out) = 1 and sweeps the tape in reverse. Rejects
  // non-scalar outputs.
  void backward(Value out);

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  Value make(Array value, bool needs_grad);
  static void require(bool cond, const char* msg);

  std::deque<Node> nodes_;
  bool record_;
  GradSink* sink_;
};

inline const Array& Value::value() const { return node_->val(); }
inline const Array& Value::grad() const { return node_->grad; }

}  // namespace pieapp::numeric
