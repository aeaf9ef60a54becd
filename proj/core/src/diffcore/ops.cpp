#include "feasplan/diffcore/ops.hpp"

#include "feasplan/common/error.hpp"

#include <cmath>
#include <string>

namespace feasplan::diffcore {
namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

Tape& same_tape(std::string_view op, Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw InvalidArgument(std::string(op) + ": operands recorded on different tapes");
  }
  return *a.tape();
}

void require_same_shape(std::string_view op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                     shape_str(b.value()));
  }
}

// Unary elementwise op with derivative computed from (input, output).
template <typename Fwd, typename Deriv>
Var unary(OpKind kind, Var a, Fwd fwd, Deriv deriv) {
  Tape& tape = *a.tape();
  Tensor out = a.value().unaryExpr(fwd);
  return tape.record(kind, std::move(out), {a.id()}, [deriv](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& p = t.node(n.parents[0]);
    p.grad.array() += n.grad.array() * p.value.binaryExpr(n.value, deriv).array();
  });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape("add", a, b);
  require_same_shape("add", a, b);
  return tape.record(OpKind::add, a.value() + b.value(), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    t.node(n.parents[0]).grad += n.grad;
    t.node(n.parents[1]).grad += n.grad;
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape("sub", a, b);
  require_same_shape("sub", a, b);
  return tape.record(OpKind::sub, a.value() - b.value(), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    t.node(n.parents[0]).grad += n.grad;
    t.node(n.parents[1]).grad -= n.grad;
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape("mul", a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value().cwiseProduct(b.value());
  return tape.record(OpKind::mul, std::move(out), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& pa = t.node(n.parents[0]);
    Node& pb = t.node(n.parents[1]);
    pa.grad += n.grad.cwiseProduct(pb.value);
    pb.grad += n.grad.cwiseProduct(pa.value);
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double factor) {
  Tape& tape = *a.tape();
  return tape.record(OpKind::scale, a.value() * factor, {a.id()}, [factor](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    t.node(n.parents[0]).grad += factor * n.grad;
  });
}

Var shift(Var a, double offset) {
  Tape& tape = *a.tape();
  Tensor out = a.value().array() + offset;
  return tape.record(OpKind::shift, std::move(out), {a.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    t.node(n.parents[0]).grad += n.grad;
  });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.value()) + " * " +
                     shape_str(b.value()));
  }
  Tensor out = a.value() * b.value();
  return tape.record(OpKind::matmul, std::move(out), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& pa = t.node(n.parents[0]);
    Node& pb = t.node(n.parents[1]);
    if (pa.requires_grad) pa.grad.noalias() += n.grad * pb.value.transpose();
    if (pb.requires_grad) pb.grad.noalias() += pa.value.transpose() * n.grad;
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& tape = same_tape("affine", x, w);
  same_tape("affine", x, b);
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("affine: incompatible shapes x " + shape_str(x.value()) + ", w " +
                     shape_str(w.value()) + ", b " + shape_str(b.value()));
  }
  Tensor out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return tape.record(OpKind::affine, std::move(out), {x.id(), w.id(), b.id()},
                     [](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       Node& px = t.node(n.parents[0]);
                       Node& pw = t.node(n.parents[1]);
                       Node& pb = t.node(n.parents[2]);
                       if (px.requires_grad) px.grad.noalias() += n.grad * pw.value.transpose();
                       if (pw.requires_grad) pw.grad.noalias() += px.value.transpose() * n.grad;
                       if (pb.requires_grad) pb.grad += n.grad.colwise().sum();
                     });
}

Var tanh(Var a) {
  return unary(
      OpKind::tanh, a, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary(
      OpKind::softplus, a,
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double x, double) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var sin(Var a) {
  return unary(
      OpKind::sin, a, [](double v) { return std::sin(v); },
      [](double x, double) { return std::cos(x); });
}

Var cos(Var a) {
  return unary(
      OpKind::cos, a, [](double v) { return std::cos(v); },
      [](double x, double) { return -std::sin(x); });
}

Var sqrt(Var a) {
  return unary(
      OpKind::sqrt, a, [](double v) { return std::sqrt(v); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var square(Var a) {
  return unary(
      OpKind::square, a, [](double v) { return v * v; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(
      OpKind::abs, a, [](double v) { return std::abs(v); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var reciprocal(Var a, double stabilizer) {
  return unary(
      OpKind::reciprocal, a, [stabilizer](double v) { return 1.0 / (v + stabilizer); },
      [](double, double y) { return -y * y; });
}

Var pow(Var a, double exponent) {
  return unary(
      OpKind::pow, a, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double x, double) { return exponent * std::pow(x, exponent - 1.0); });
}

Var sum(Var a) {
  Tape& tape = *a.tape();
  return tape.record(OpKind::sum, Tensor::Constant(1, 1, a.value().sum()), {a.id()},
                     [](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       t.node(n.parents[0]).grad.array() += n.grad(0, 0);
                     });
}

Var mean(Var a) {
  Tape& tape = *a.tape();
  const auto count = static_cast<double>(a.value().size());
  if (count == 0) throw ShapeError("mean: empty tensor");
  return tape.record(OpKind::mean, Tensor::Constant(1, 1, a.value().sum() / count), {a.id()},
                     [count](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       t.node(n.parents[0]).grad.array() += n.grad(0, 0) / count;
                     });
}

Var sq_norm(Var a) {
  Tape& tape = *a.tape();
  return tape.record(OpKind::sq_norm, Tensor::Constant(1, 1, a.value().squaredNorm()), {a.id()},
                     [](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       Node& p = t.node(n.parents[0]);
                       p.grad += (2.0 * n.grad(0, 0)) * p.value;
                     });
}

Var row_sum(Var a) {
  Tape& tape = *a.tape();
  Tensor out = a.value().rowwise().sum();
  return tape.record(OpKind::row_sum, std::move(out), {a.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& p = t.node(n.parents[0]);
    p.grad.colwise() += n.grad.col(0);
  });
}

Var hinge(Var a) {
  return unary(
      OpKind::hinge, a, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var minimum(Var a, Var b) {
  Tape& tape = same_tape("minimum", a, b);
  require_same_shape("minimum", a, b);
  Tensor out = a.value().cwiseMin(b.value());
  return tape.record(OpKind::minimum, std::move(out), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& pa = t.node(n.parents[0]);
    Node& pb = t.node(n.parents[1]);
    const auto first = (pa.value.array() <= pb.value.array()).cast<double>();
    pa.grad.array() += n.grad.array() * first;
    pb.grad.array() += n.grad.array() * (1.0 - first);
  });
}

Var maximum(Var a, Var b) {
  Tape& tape = same_tape("maximum", a, b);
  require_same_shape("maximum", a, b);
  Tensor out = a.value().cwiseMax(b.value());
  return tape.record(OpKind::maximum, std::move(out), {a.id(), b.id()}, [](Tape& t, NodeId self) {
    const Node& n = t.node(self);
    Node& pa = t.node(n.parents[0]);
    Node& pb = t.node(n.parents[1]);
    const auto first = (pa.value.array() >= pb.value.array()).cast<double>();
    pa.grad.array() += n.grad.array() * first;
    pb.grad.array() += n.grad.array() * (1.0 - first);
  });
}

Var broadcast(Var scalar, Eigen::Index rows, Eigen::Index cols) {
  if (scalar.rows() != 1 || scalar.cols() != 1) {
    throw ShapeError("broadcast: expected 1x1, got " + shape_str(scalar.value()));
  }
  Tape& tape = *scalar.tape();
  return tape.record(OpKind::broadcast, Tensor::Constant(rows, cols, scalar.value()(0, 0)),
                     {scalar.id()}, [](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       t.node(n.parents[0]).grad(0, 0) += n.grad.sum();
                     });
}

Var select_cols(Var a, std::span<const Eigen::Index> columns) {
  Tape& tape = *a.tape();
  const Tensor& v = a.value();
  std::vector<Eigen::Index> idx(columns.begin(), columns.end());
  Tensor out(v.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= v.cols()) {
      throw ShapeError("select_cols: column " + std::to_string(idx[j]) + " out of range for " +
                       shape_str(v));
    }
    out.col(static_cast<Eigen::Index>(j)) = v.col(idx[j]);
  }
  return tape.record(OpKind::select_cols, std::move(out), {a.id()},
                     [idx = std::move(idx)](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       Node& p = t.node(n.parents[0]);
                       for (std::size_t j = 0; j < idx.size(); ++j) {
                         p.grad.col(idx[j]) += n.grad.col(static_cast<Eigen::Index>(j));
                       }
                     });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& tape = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<NodeId> parents;
  for (const Var& p : parts) {
    same_tape("concat_cols", parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts.front().value()) + " vs " +
                       shape_str(p.value()));
    }
    cols += p.cols();
    parents.push_back(p.id());
  }
  Tensor out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return tape.record(OpKind::concat_cols, std::move(out), std::move(parents),
                     [](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       Eigen::Index off = 0;
                       for (NodeId pid : n.parents) {
                         Node& p = t.node(pid);
                         p.grad += n.grad.middleCols(off, p.value.cols());
                         off += p.value.cols();
                       }
                     });
}

Var custom_binary(Var a, Var b, Tensor value, Tensor partial_a, Tensor partial_b) {
  Tape& tape = same_tape("custom", a, b);
  require_same_shape("custom", a, b);
  if (value.rows() != a.rows() || value.cols() != a.cols() || partial_a.rows() != a.rows() ||
      partial_a.cols() != a.cols() || partial_b.rows() != a.rows() ||
      partial_b.cols() != a.cols()) {
    throw ShapeError("custom: value/partials must match operand shape " + shape_str(a.value()));
  }
  return tape.record(OpKind::custom, std::move(value), {a.id(), b.id()},
                     [pa = std::move(partial_a), pb = std::move(partial_b)](Tape& t, NodeId self) {
                       const Node& n = t.node(self);
                       t.node(n.parents[0]).grad += n.grad.cwiseProduct(pa);
                       t.node(n.parents[1]).grad += n.grad.cwiseProduct(pb);
                     });
}

}  // namespace feasplan::diffcore
