#include "feasplan/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace feasplan::diffcore {
namespace {

double evaluate(const ScalarFunction& f, const Tensor& point) {
  Tape tape;
  Var x = tape.leaf(point);
  return f(tape, x).scalar();
}

}  // namespace

Tensor numeric_gradient(const ScalarFunction& f, const Tensor& point, double step) {
  Tensor g(point.rows(), point.cols());
  Tensor probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double orig = probe(i);
    probe(i) = orig + step;
    const double up = evaluate(f, probe);
    probe(i) = orig - step;
    const double down = evaluate(f, probe);
    probe(i) = orig;
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

double grad_check(const ScalarFunction& f, const Tensor& point, double step) {
  Tape tape;
  Var x = tape.leaf(point);
  tape.backward(f(tape, x));
  const Tensor analytic = x.grad();
  const Tensor numeric = numeric_gradient(f, point, step);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / (std::abs(numeric(i)) + 1e-12));
  }
  return worst;
}

}  // namespace feasplan::diffcore
