#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "camboost/tensor.hpp"

namespace camboost {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

class Tape;

/// Local backward rule of a recorded primitive. `input_grads[i]` is empty
/// when input i does not require a gradient; otherwise the rule adds its
/// contribution into it.
using BackwardFn =
    std::function<void(const Tape& tape, std::span<const double> out_grad, std::span<std::span<double>> input_grads)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the tape is
/// always topologically sorted; backward sweeps it once in reverse.
///
/// A Tape belongs to one thread and one step. Parameters are bound by
/// reference and must outlive the tape.
class Tape {
 public:
  Var constant(Tensor value);
  /// Records `param` as a leaf. backward() adds d(loss)/d(param) into
  /// `param.grad()` when param.requires_grad() is set.
  Var parameter(Tensor& param);

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient of the last backward() target w.r.t. v; empty if v does not
  /// require a gradient.
  std::span<const double> grad(Var v) const;

  /// Populates gradients. Throws UsageError if `loss` is not a scalar.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    std::vector<Var> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool requires_grad = false;
    Buffer grad;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

// Taped primitives.
Var conv2d(Tape& tape, Var input, Var kernel, Var bias);
Var pointwise_conv(Tape& tape, Var features, Var weight, Var bias);
Var pointwise_conv(Tape& tape, Var features, Var weight);
Var relu(Tape& tape, Var x);
Var global_average_pool(Tape& tape, Var map);
Var sigmoid(Tape& tape, Var x);
/// Sum of all elements, as a scalar.
Var sum(Tape& tape, Var x);
/// Elementwise a * x.
Var scale(Tape& tape, Var x, double factor);
/// Mean of a list of scalars.
Var mean(Tape& tape, std::span<const Var> scalars);
/// Elementwise a + b of equal shapes.
Var add(Tape& tape, Var a, Var b);
/// Elementwise a * b of equal shapes.
Var mul(Tape& tape, Var a, Var b);

}  // namespace camboost
