#include "feasplan/diffcore/adam.hpp"

#include "feasplan/common/error.hpp"

#include <cmath>

namespace feasplan::diffcore {

Adam::Adam(AdamConfig cfg, std::span<const Tensor> shapes) : cfg_(cfg) {
  for (const Tensor& s : shapes) {
    m_.push_back(Tensor::Zero(s.rows(), s.cols()));
    v_.push_back(Tensor::Zero(s.rows(), s.cols()));
  }
}

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads, double learning_rate) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: parameter/gradient count mismatch");
  }
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double total = 0.0;
    for (const Tensor& g : grads) total += g.squaredNorm();
    const double norm = std::sqrt(total);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw ShapeError("adam: gradient shape differs from parameter " + std::to_string(i));
    }
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * clip * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * (clip * grads[i]).cwiseAbs2();
    params[i].array() -= learning_rate * (m_[i].array() / bc1) /
                         ((v_[i].array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace feasplan::diffcore
