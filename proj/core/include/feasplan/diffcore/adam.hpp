#pragma once

#include "feasplan/diffcore/tape.hpp"

#include <span>
#include <vector>

namespace feasplan::diffcore {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 1.0;
};

// Adaptive-moment optimizer over a fixed list of parameter tensors.
class Adam {
 public:
  Adam(AdamConfig cfg, std::span<const Tensor> shapes);

  // One update with the given step size (the caller owns the decay schedule).
  void step(std::span<Tensor> params, std::span<const Tensor> grads, double learning_rate);
  void step(std::span<Tensor> params, std::span<const Tensor> grads) {
    step(params, grads, cfg_.learning_rate);
  }

  [[nodiscard]] const AdamConfig& config() const { return cfg_; }
  [[nodiscard]] long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

}  // namespace feasplan::diffcore
