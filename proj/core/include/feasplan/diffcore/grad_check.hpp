#pragma once

#include "feasplan/diffcore/tape.hpp"

#include <functional>

namespace feasplan::diffcore {

// Builds a scalar output from a single differentiable input on the given tape.
using ScalarFunction = std::function<Var(Tape&, Var)>;

// Max over coordinates of |analytic - central difference| / (|central difference| + 1e-12).
double grad_check(const ScalarFunction& f, const Tensor& point, double step);

// Central-difference gradient of f at point.
Tensor numeric_gradient(const ScalarFunction& f, const Tensor& point, double step);

}  // namespace feasplan::diffcore
