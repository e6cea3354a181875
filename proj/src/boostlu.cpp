#include "camboost/boostlu.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "camboost/error.hpp"

namespace camboost {

void BoostParams::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
    throw ValueError("boost alpha must be a finite value >= 1, got " + std::to_string(alpha));
  }
  if (!std::isfinite(beta)) throw ValueError("boost beta must be finite");
}

double boostlu_general(double x, double alpha, double beta) {
  if (alpha == 1.0) return x;
  return x >= beta ? beta + alpha * (x - beta) : x;
}

double boostlu(double x, double alpha) { return std::max(x, alpha * x); }

double boostlu_grad(double x, double alpha) { return x >= 0.0 ? alpha : 1.0; }

double boostlu_general_grad(double x, double alpha, double beta) { return x >= beta ? alpha : 1.0; }

namespace {

std::size_t channel_stride(const Tensor& map, const std::vector<bool>& channel_enabled) {
  if (channel_enabled.empty()) return 0;
  if (map.rank() != 3 || map.dim(0) != channel_enabled.size()) {
    throw DimensionError("boost channel mask of length " + std::to_string(channel_enabled.size()) +
                         " for map " + shape_string(map.shape()));
  }
  return map.dim(1) * map.dim(2);
}

}  // namespace

Tensor boostlu_map(const Tensor& map, const BoostParams& params, const std::vector<bool>& channel_enabled) {
  const std::size_t stride = channel_stride(map, channel_enabled);
  Tensor out(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const bool on = stride == 0 || channel_enabled[i / stride];
    out[i] = on ? boostlu_general(map[i], params.alpha, params.beta) : map[i];
  }
  return out;
}

Var boostlu_map(Tape& tape, Var map, const BoostParams& params, const std::vector<bool>& channel_enabled) {
  const Tensor& in = tape.value(map);
  const std::size_t stride = channel_stride(in, channel_enabled);
  Tensor out = boostlu_map(in, params, channel_enabled);
  std::vector<bool> mask(channel_enabled.begin(), channel_enabled.end());
  return tape.record(std::move(out), {map},
                     [map, params, stride, mask](const Tape& t, std::span<const double> g,
                                                 std::span<std::span<double>> grads) {
                       const auto x = t.value(map).data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const bool on = stride == 0 || mask[i / stride];
                         const double slope = on ? boostlu_general_grad(x[i], params.alpha, params.beta) : 1.0;
                         grads[0][i] += g[i] * slope;
                       }
                     });
}

}  // namespace camboost
