#pragma once

#include <cmath>
#include <vector>

#include "gpawp/tensor.hpp"

namespace gpawp {

// Gradient descent with per-parameter first/second moment scaling.
class AdamState {
 public:
  explicit AdamState(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Tensor& params, const Tensor& grads) {
    if (m_.empty()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads.values[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      params.values[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_{0};
  std::vector<double> m_, v_;
};

}  // namespace gpawp
