#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace synthplan {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Plain Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig config)
      : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw std::invalid_argument("Adam: size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace synthplan
