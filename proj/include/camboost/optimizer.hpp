#pragma once

#include <cstddef>
#include <vector>

#include "camboost/tensor.hpp"

namespace camboost {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ParamGroup {
  std::vector<Tensor*> params;
  double learning_rate = 1e-3;
};

/// Bias-corrected adaptive-moment updates over parameter groups with
/// separate learning rates.
class Adam {
 public:
  Adam(std::vector<ParamGroup> groups, AdamConfig config = {});

  /// Applies one update from the accumulated gradients. Parameters without a
  /// gradient slot are skipped.
  void step();
  std::size_t steps() const noexcept { return t_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<ParamGroup> groups_;
  std::vector<std::vector<Moments>> state_;
  AdamConfig config_;
  std::size_t t_ = 0;
};

}  // namespace camboost
