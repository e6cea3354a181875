#include "camboost/optimizer.hpp"

#include <cmath>

#include "camboost/error.hpp"

namespace camboost {

Adam::Adam(std::vector<ParamGroup> groups, AdamConfig config) : groups_(std::move(groups)), config_(config) {
  for (const auto& g : groups_) {
    if (!(g.learning_rate > 0.0)) throw ValueError("learning rate must be positive");
    std::vector<Moments> moments;
    for (const auto* p : g.params) moments.push_back({std::vector<double>(p->size()), std::vector<double>(p->size())});
    state_.push_back(std::move(moments));
  }
}

void Adam::step() {
  ++t_;
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const double lr = groups_[gi].learning_rate;
    for (std::size_t pi = 0; pi < groups_[gi].params.size(); ++pi) {
      Tensor& p = *groups_[gi].params[pi];
      if (!p.has_grad()) continue;
      auto& st = state_[gi][pi];
      const auto grad = std::as_const(p).grad();
      auto w = p.data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        st.m[i] = config_.beta1 * st.m[i] + (1.0 - config_.beta1) * grad[i];
        st.v[i] = config_.beta2 * st.v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
        const double m_hat = st.m[i] / c1;
        const double v_hat = st.v[i] / c2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }
}

}  // namespace camboost
