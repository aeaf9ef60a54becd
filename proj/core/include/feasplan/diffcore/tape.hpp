#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <string_view>
#include <vector>

namespace feasplan::diffcore {

using Tensor = Eigen::MatrixXd;
using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
  leaf,
  constant,
  add,
  sub,
  mul,
  neg,
  scale,
  shift,
  matmul,
  affine,
  tanh,
  softplus,
  sin,
  cos,
  sqrt,
  square,
  abs,
  reciprocal,
  pow,
  sum,
  mean,
  row_sum,
  sq_norm,
  hinge,
  minimum,
  maximum,
  broadcast,
  select_cols,
  concat_cols,
  custom,
};

std::string_view op_name(OpKind kind);

class Tape;

// Handle to a node recorded on a tape. Cheap to copy; only valid while the
// owning tape is alive and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] const Tensor& grad() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const;
  [[nodiscard]] NodeId id() const { return id_; }
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

// Backward rule: accumulate the node's upstream gradient into its parents.
using BackwardRule = std::function<void(Tape&, NodeId self)>;

struct Node {
  Tensor value;
  Tensor grad;
  std::vector<NodeId> parents;
  OpKind kind = OpKind::constant;
  bool requires_grad = false;
  BackwardRule rule;
};

using GradientMap = std::map<NodeId, Tensor>;

// Define-by-run gradient tape. Nodes are appended in evaluation order, so
// insertion order is a topological order. Single-threaded; use one tape per
// thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Differentiable input (parameter or variable).
  Var leaf(Tensor value);
  Var leaf(double value);
  Var constant(Tensor value);
  Var constant(double value);

  // Records an op node. Gradient tracking is inherited from the parents; the
  // rule is dropped when no parent requires a gradient.
  Var record(OpKind kind, Tensor value, std::vector<NodeId> parents, BackwardRule rule);

  // Reverse sweep from a scalar (1x1) output. Gradients are zeroed first, so
  // repeated calls produce identical results.
  GradientMap backward(Var output);

  void zero_grad();
  // Removes every node; outstanding Vars become dangling.
  void clear();

  [[nodiscard]] const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  [[nodiscard]] Node& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<NodeId>& leaf_ids() const { return leaf_ids_; }

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> leaf_ids_;
};

}  // namespace feasplan::diffcore
