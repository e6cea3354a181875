#include "camboost/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "camboost/error.hpp"

namespace camboost::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

double row_sum(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

struct ConvGeometry {
  std::size_t cin, cout, k, h, w, pad;
  std::size_t patch() const { return cin * k * k; }
  std::size_t pixels() const { return h * w; }
};

ConvGeometry check_conv(const Tensor& input, const Tensor& kernel, const Tensor* bias) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const auto k = kernel.dim(2);
  if (kernel.dim(3) != k || k % 2 == 0) {
    throw DimensionError("conv2d kernel must be square with odd side, got " + shape_string(kernel.shape()));
  }
  if (kernel.dim(1) != input.dim(0)) {
    throw DimensionError("conv2d kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                         std::to_string(input.dim(0)));
  }
  if (bias && !bias->empty() && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0))) {
    throw DimensionError("conv2d bias shape " + shape_string(bias->shape()) + " does not match " +
                         std::to_string(kernel.dim(0)) + " output channels");
  }
  return {input.dim(0), kernel.dim(0), k, input.dim(1), input.dim(2), (k - 1) / 2};
}

// Rows are (ci, ki, kj) in kernel order, columns are output pixels.
RowMatrix im2col(const Tensor& input, const ConvGeometry& g) {
  RowMatrix cols(g.patch(), g.pixels());
  const auto in = input.data();
  const auto h = static_cast<std::ptrdiff_t>(g.h);
  const auto w = static_cast<std::ptrdiff_t>(g.w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj, ++row) {
        double* dst = cols.row(static_cast<Eigen::Index>(row)).data();
        const auto di = static_cast<std::ptrdiff_t>(ki) - pad;
        const auto dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::ptrdiff_t i = 0; i < h; ++i) {
          const auto si = i + di;
          double* out_row = dst + i * w;
          if (si < 0 || si >= h) {
            std::fill(out_row, out_row + w, 0.0);
            continue;
          }
          const double* src = in.data() + (ci * g.h + static_cast<std::size_t>(si)) * g.w;
          for (std::ptrdiff_t j = 0; j < w; ++j) {
            const auto sj = j + dj;
            out_row[j] = (sj < 0 || sj >= w) ? 0.0 : src[sj];
          }
        }
      }
    }
  }
  return cols;
}

void col2im_accumulate(const RowMatrix& cols, const ConvGeometry& g, std::span<double> out) {
  const auto h = static_cast<std::ptrdiff_t>(g.h);
  const auto w = static_cast<std::ptrdiff_t>(g.w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj, ++row) {
        const double* src = cols.row(static_cast<Eigen::Index>(row)).data();
        const auto di = static_cast<std::ptrdiff_t>(ki) - pad;
        const auto dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::ptrdiff_t i = 0; i < h; ++i) {
          const auto si = i + di;
          if (si < 0 || si >= h) continue;
          double* dst = out.data() + (ci * g.h + static_cast<std::size_t>(si)) * g.w;
          for (std::ptrdiff_t j = 0; j < w; ++j) {
            const auto sj = j + dj;
            if (sj >= 0 && sj < w) dst[sj] += src[i * w + j];
          }
        }
      }
    }
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  const auto g = check_conv(input, kernel, &bias);
  const RowMatrix cols = im2col(input, g);
  Tensor out(Shape{g.cout, g.h, g.w});
  MutMap out_m(out.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.pixels()));
  ConstMap k_m(kernel.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
  out_m.noalias() = k_m * cols;
  if (!bias.empty()) {
    for (std::size_t c = 0; c < g.cout; ++c) out_m.row(static_cast<Eigen::Index>(c)).array() += bias[c];
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, std::span<const double> out_grad,
                            bool want_input_grad) {
  const auto g = check_conv(input, kernel, nullptr);
  if (out_grad.size() != g.cout * g.pixels()) {
    throw DimensionError("conv2d output gradient has wrong length");
  }
  ConstMap dout(out_grad.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.pixels()));
  const RowMatrix cols = im2col(input, g);

  Conv2dGrads grads;
  grads.kernel = Tensor(kernel.shape());
  MutMap dk(grads.kernel.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
  dk.noalias() = dout * cols.transpose();

  grads.bias = Tensor(Shape{g.cout});
  for (std::size_t c = 0; c < g.cout; ++c) grads.bias[c] = row_sum(out_grad.data() + c * g.pixels(), g.pixels());

  if (want_input_grad) {
    ConstMap k_m(kernel.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
    const RowMatrix dcols = k_m.transpose() * dout;
    grads.input = Tensor(input.shape());
    col2im_accumulate(dcols, g, grads.input.data());
  }
  return grads;
}

Tensor pointwise_conv(const Tensor& features, const Tensor& weight, const Tensor& bias) {
  require_rank(features, 3, "pointwise_conv features");
  require_rank(weight, 2, "pointwise_conv weight");
  const auto d = features.dim(0);
  const auto c = weight.dim(0);
  if (weight.dim(1) != d) {
    throw DimensionError("head expects " + std::to_string(weight.dim(1)) + " feature channels, got " +
                         std::to_string(d));
  }
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != c)) {
    throw DimensionError("head bias shape " + shape_string(bias.shape()) + " does not match " + std::to_string(c) +
                         " classes");
  }
  const auto hw = features.dim(1) * features.dim(2);
  Tensor out(Shape{c, features.dim(1), features.dim(2)});
  MutMap out_m(out.data().data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(hw));
  ConstMap w_m(weight.data().data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  ConstMap f_m(features.data().data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(hw));
  out_m.noalias() = w_m * f_m;
  if (!bias.empty()) {
    for (std::size_t i = 0; i < c; ++i) out_m.row(static_cast<Eigen::Index>(i)).array() += bias[i];
  }
  return out;
}

PointwiseGrads pointwise_conv_backward(const Tensor& features, const Tensor& weight, bool has_bias,
                                       std::span<const double> out_grad, bool want_feature_grad) {
  const auto d = features.dim(0);
  const auto c = weight.dim(0);
  const auto hw = features.dim(1) * features.dim(2);
  ConstMap dout(out_grad.data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(hw));
  ConstMap f_m(features.data().data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(hw));

  PointwiseGrads grads;
  grads.weight = Tensor(weight.shape());
  MutMap dw(grads.weight.data().data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  dw.noalias() = dout * f_m.transpose();
  if (has_bias) {
    grads.bias = Tensor(Shape{c});
    for (std::size_t i = 0; i < c; ++i) grads.bias[i] = row_sum(out_grad.data() + i * hw, hw);
  }
  if (want_feature_grad) {
    ConstMap w_m(weight.data().data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
    grads.features = Tensor(features.shape());
    MutMap df(grads.features.data().data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(hw));
    df.noalias() = w_m.transpose() * dout;
  }
  return grads;
}

Tensor global_average_pool(const Tensor& map) {
  require_rank(map, 3, "global_average_pool input");
  const auto c = map.dim(0);
  const auto hw = map.dim(1) * map.dim(2);
  if (hw == 0) {
    throw DimensionError("global_average_pool over empty spatial extent " + shape_string(map.shape()));
  }
  Tensor out(Shape{c});
  const auto in = map.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t p = 0; p < hw; ++p) sum += in[ch * hw + p];
    out[ch] = sum / static_cast<double>(hw);
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

}  // namespace camboost::ops
