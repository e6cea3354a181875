#pragma once

#include <span>

#include "camboost/tensor.hpp"

namespace camboost::ops {

// Forward kernels and their vector-Jacobian products. These are untaped;
// Tape wraps them into recorded primitives.

/// Numerically stable logistic function (branches on sign).
double sigmoid(double x);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Stride-1, same-padded cross-correlation. Kernel side must be odd.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

struct Conv2dGrads {
  Tensor input;   // empty when not requested
  Tensor kernel;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, std::span<const double> out_grad,
                            bool want_input_grad);

/// 1x1 convolution: out[c] = sum_d weight[c,d] * features[d] + bias[c].
/// `bias` may be empty (no bias term).
Tensor pointwise_conv(const Tensor& features, const Tensor& weight, const Tensor& bias);

struct PointwiseGrads {
  Tensor features;  // empty when not requested
  Tensor weight;
  Tensor bias;      // empty when the forward had no bias
};
PointwiseGrads pointwise_conv_backward(const Tensor& features, const Tensor& weight, bool has_bias,
                                       std::span<const double> out_grad, bool want_feature_grad);

/// Spatial mean per channel: C x H x W -> C.
Tensor global_average_pool(const Tensor& map);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

}  // namespace camboost::ops
