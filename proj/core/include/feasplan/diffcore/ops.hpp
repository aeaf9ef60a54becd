#pragma once

#include "feasplan/diffcore/tape.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace feasplan::diffcore {

// Elementwise binary ops require identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double factor);
Var shift(Var a, double offset);

Var matmul(Var a, Var b);
// x * w + 1 * b, with b a single row broadcast over the rows of x.
Var affine(Var x, Var w, Var b);

Var tanh(Var a);
// Numerically stable log(1 + exp(a)).
Var softplus(Var a);
Var sin(Var a);
Var cos(Var a);
// Gradient is defined as 0 where the value is exactly 0.
Var sqrt(Var a);
Var square(Var a);
// Subgradient 0 at 0.
Var abs(Var a);
// 1 / (a + stabilizer).
Var reciprocal(Var a, double stabilizer = 0.0);
// a^exponent for a >= 0 (used with exponent 3/2).
Var pow(Var a, double exponent);

// Reductions to 1x1.
Var sum(Var a);
Var mean(Var a);
Var sq_norm(Var a);
// Per-row sum, rows x 1.
Var row_sum(Var a);

// max(a, 0); derivative 0 at a == 0.
Var hinge(Var a);
// Elementwise min/max; ties route the gradient to the first argument.
Var minimum(Var a, Var b);
Var maximum(Var a, Var b);

// 1x1 -> rows x cols.
Var broadcast(Var scalar, Eigen::Index rows, Eigen::Index cols);
// Gathers columns by index (repeats allowed); backward scatter-adds.
Var select_cols(Var a, std::span<const Eigen::Index> columns);
Var concat_cols(std::span<const Var> parts);

// Elementwise op with caller-supplied value and partial derivatives; used for
// lookups whose analytic gradient is computed outside the tape.
Var custom_binary(Var a, Var b, Tensor value, Tensor partial_a, Tensor partial_b);

}  // namespace feasplan::diffcore
