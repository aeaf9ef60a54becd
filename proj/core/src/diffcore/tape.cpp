#include "feasplan/diffcore/tape.hpp"

#include "feasplan/common/error.hpp"

#include <string>

namespace feasplan::diffcore {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::neg: return "neg";
    case OpKind::scale: return "scale";
    case OpKind::shift: return "shift";
    case OpKind::matmul: return "matmul";
    case OpKind::affine: return "affine";
    case OpKind::tanh: return "tanh";
    case OpKind::softplus: return "softplus";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::sqrt: return "sqrt";
    case OpKind::square: return "square";
    case OpKind::abs: return "abs";
    case OpKind::reciprocal: return "reciprocal";
    case OpKind::pow: return "pow";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::row_sum: return "row_sum";
    case OpKind::sq_norm: return "sq_norm";
    case OpKind::hinge: return "hinge";
    case OpKind::minimum: return "minimum";
    case OpKind::maximum: return "maximum";
    case OpKind::broadcast: return "broadcast";
    case OpKind::select_cols: return "select_cols";
    case OpKind::concat_cols: return "concat_cols";
    case OpKind::custom: return "custom";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->node(id_).value; }
const Tensor& Var::grad() const { return tape_->node(id_).grad; }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar: expected 1x1, got " + std::to_string(v.rows()) + "x" +
                     std::to_string(v.cols()));
  }
  return v(0, 0);
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.grad = Tensor::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.kind = OpKind::leaf;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  auto id = static_cast<NodeId>(nodes_.size() - 1);
  leaf_ids_.push_back(id);
  return {this, id};
}

Var Tape::leaf(double value) { return leaf(Tensor::Constant(1, 1, value)); }

Var Tape::constant(Tensor value) {
  Node n;
  n.grad = Tensor::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.kind = OpKind::constant;
  nodes_.push_back(std::move(n));
  return {this, static_cast<NodeId>(nodes_.size() - 1)};
}

Var Tape::constant(double value) { return constant(Tensor::Constant(1, 1, value)); }

Var Tape::record(OpKind kind, Tensor value, std::vector<NodeId> parents, BackwardRule rule) {
  Node n;
  n.grad = Tensor::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.kind = kind;
  for (NodeId p : parents) n.requires_grad = n.requires_grad || node(p).requires_grad;
  if (n.requires_grad) n.rule = std::move(rule);
  n.parents = std::move(parents);
  nodes_.push_back(std::move(n));
  return {this, static_cast<NodeId>(nodes_.size() - 1)};
}

GradientMap Tape::backward(Var output) {
  if (output.tape() != this) throw InvalidArgument("backward: output belongs to another tape");
  const Node& out = node(output.id());
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw ShapeError("backward: output must be scalar, got " + std::to_string(out.value.rows()) +
                     "x" + std::to_string(out.value.cols()));
  }
  zero_grad();
  node(output.id()).grad(0, 0) = 1.0;
  for (NodeId i = output.id(); i >= 0; --i) {
    Node& n = node(i);
    if (n.requires_grad && n.rule) n.rule(*this, i);
  }
  GradientMap grads;
  for (NodeId id : leaf_ids_) grads.emplace(id, node(id).grad);
  return grads;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.setZero();
}

void Tape::clear() {
  nodes_.clear();
  leaf_ids_.clear();
}

}  // namespace feasplan::diffcore
