#pragma once

#include <span>
#include <vector>

#include "camboost/tape.hpp"
#include "camboost/tensor.hpp"

namespace camboost {

/// Scaling factor and threshold of the boosting activation. Defaults are
/// alpha = 5, beta = 0.
struct BoostParams {
  double alpha = 5.0;
  double beta = 0.0;

  /// Throws ValueError unless alpha >= 1 and beta is finite.
  void validate() const;
  bool is_identity() const noexcept { return alpha == 1.0; }
};

/// alpha * x + (1 - alpha) * beta for x >= beta, x otherwise.
double boostlu_general(double x, double alpha, double beta);
/// max(x, alpha * x); the beta = 0 form.
double boostlu(double x, double alpha);
/// d boostlu / dx: alpha for x >= 0 (right subgradient at 0), 1 below.
double boostlu_grad(double x, double alpha);
/// Derivative of the general form; the knot x = beta takes the boosted slope.
double boostlu_general_grad(double x, double alpha, double beta);

/// Elementwise boost of a C x H x W map. When `channel_enabled` is
/// non-empty it has one flag per channel and disabled channels pass through.
Tensor boostlu_map(const Tensor& map, const BoostParams& params, const std::vector<bool>& channel_enabled = {});
Var boostlu_map(Tape& tape, Var map, const BoostParams& params, const std::vector<bool>& channel_enabled = {});

}  // namespace camboost
