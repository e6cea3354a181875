#include "camboost/tape.hpp"

#include <algorithm>

#include "camboost/error.hpp"
#include "camboost/ops.hpp"

namespace camboost {

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor& param) {
  Node n;
  n.value = Tensor(param.shape());
  std::copy(param.data().begin(), param.data().end(), n.value.data().begin());
  n.bound = &param;
  n.requires_grad = param.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var in : inputs) {
    if (in.id >= nodes_.size()) throw UsageError("tape input refers to an unrecorded value");
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("variable not recorded on this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<const double> Tape::grad(Var v) const { return node(v).grad; }

void Tape::backward(Var loss) {
  const Node& target = node(loss);
  if (target.value.size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_string(target.value.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  if (!target.requires_grad) return;

  for (std::size_t i = 0; i <= loss.id; ++i) {
    if (nodes_[i].requires_grad) nodes_[i].grad.assign(nodes_[i].value.size(), 0.0);
  }
  nodes_[loss.id].grad[0] = 1.0;

  std::vector<std::span<double>> input_grads;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    input_grads.clear();
    for (const Var in : n.inputs) {
      Node& src = nodes_[in.id];
      input_grads.push_back(src.requires_grad ? std::span<double>(src.grad) : std::span<double>());
    }
    n.backward(*this, n.grad, input_grads);
  }

  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.bound && n.requires_grad) n.bound->accumulate_grad(n.grad);
  }
}

namespace {

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var conv2d(Tape& tape, Var input, Var kernel, Var bias) {
  Tensor out = ops::conv2d(tape.value(input), tape.value(kernel), tape.value(bias));
  return tape.record(std::move(out), {input, kernel, bias},
                     [input, kernel](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
                       auto grads = ops::conv2d_backward(t.value(input), t.value(kernel), g, !in[0].empty());
                       if (!in[0].empty()) add_into(in[0], grads.input.data());
                       if (!in[1].empty()) add_into(in[1], grads.kernel.data());
                       if (!in[2].empty()) add_into(in[2], grads.bias.data());
                     });
}

Var pointwise_conv(Tape& tape, Var features, Var weight, Var bias) {
  Tensor out = ops::pointwise_conv(tape.value(features), tape.value(weight), tape.value(bias));
  return tape.record(std::move(out), {features, weight, bias},
                     [features, weight](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
                       auto grads =
                           ops::pointwise_conv_backward(t.value(features), t.value(weight), true, g, !in[0].empty());
                       if (!in[0].empty()) add_into(in[0], grads.features.data());
                       if (!in[1].empty()) add_into(in[1], grads.weight.data());
                       if (!in[2].empty()) add_into(in[2], grads.bias.data());
                     });
}

Var pointwise_conv(Tape& tape, Var features, Var weight) {
  Tensor out = ops::pointwise_conv(tape.value(features), tape.value(weight), Tensor());
  return tape.record(std::move(out), {features, weight},
                     [features, weight](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
                       auto grads =
                           ops::pointwise_conv_backward(t.value(features), t.value(weight), false, g, !in[0].empty());
                       if (!in[0].empty()) add_into(in[0], grads.features.data());
                       if (!in[1].empty()) add_into(in[1], grads.weight.data());
                     });
}

Var relu(Tape& tape, Var x) {
  Tensor out = ops::relu(tape.value(x));
  // Right subgradient at 0.
  return tape.record(std::move(out), {x}, [x](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
    const auto v = t.value(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] >= 0.0) in[0][i] += g[i];
    }
  });
}

Var global_average_pool(Tape& tape, Var map) {
  Tensor out = ops::global_average_pool(tape.value(map));
  const auto& shape = tape.value(map).shape();
  const std::size_t hw = shape[1] * shape[2];
  return tape.record(std::move(out), {map}, [hw](const Tape&, std::span<const double> g, std::span<std::span<double>> in) {
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double share = g[c] * inv;
      double* dst = in[0].data() + c * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] += share;
    }
  });
}

Var sigmoid(Tape& tape, Var x) {
  Tensor out = ops::sigmoid(tape.value(x));
  const Var self{tape.size()};
  return tape.record(std::move(out), {x}, [self](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
    const auto s = t.value(self).data();
    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var sum(Tape& tape, Var x) {
  double total = 0.0;
  for (double v : tape.value(x).data()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [](const Tape&, std::span<const double> g, std::span<std::span<double>> in) {
    for (double& d : in[0]) d += g[0];
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor out = tape.value(x);
  out.set_requires_grad(false);
  for (double& v : out.data()) v *= factor;
  return tape.record(std::move(out), {x},
                     [factor](const Tape&, std::span<const double> g, std::span<std::span<double>> in) {
                       for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += factor * g[i];
                     });
}

Var mean(Tape& tape, std::span<const Var> scalars) {
  if (scalars.empty()) throw UsageError("mean of an empty list");
  double total = 0.0;
  for (const Var s : scalars) total += tape.value(s).item();
  const double inv = 1.0 / static_cast<double>(scalars.size());
  return tape.record(Tensor::scalar(total * inv), std::vector<Var>(scalars.begin(), scalars.end()),
                     [inv](const Tape&, std::span<const double> g, std::span<std::span<double>> in) {
                       for (auto& d : in) {
                         if (!d.empty()) d[0] += g[0] * inv;
                       }
                     });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  if (va.shape() != vb.shape()) {
    throw DimensionError("add of " + shape_string(va.shape()) + " and " + shape_string(vb.shape()));
  }
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return tape.record(std::move(out), {a, b}, [](const Tape&, std::span<const double> g, std::span<std::span<double>> in) {
    for (auto& d : in) {
      if (!d.empty()) add_into(d, g);
    }
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  if (va.shape() != vb.shape()) {
    throw DimensionError("mul of " + shape_string(va.shape()) + " and " + shape_string(vb.shape()));
  }
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return tape.record(std::move(out), {a, b},
                     [a, b](const Tape& t, std::span<const double> g, std::span<std::span<double>> in) {
                       const auto da = t.value(a).data();
                       const auto db = t.value(b).data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (!in[0].empty()) in[0][i] += g[i] * db[i];
                         if (!in[1].empty()) in[1][i] += g[i] * da[i];
                       }
                     });
}

}  // namespace camboost
