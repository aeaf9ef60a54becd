#include "feasplan/denoiser/denoiser.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace feasplan::denoiser {

namespace dc = diffcore;

std::string_view mode_name(Mode mode) {
  return mode == Mode::predict_x0 ? "predict_x0" : "predict_eps";
}

Mode parse_mode(std::string_view name) {
  if (name == "predict_x0" || name == "x0") return Mode::predict_x0;
  if (name == "predict_eps" || name == "eps") return Mode::predict_eps;
  throw InvalidArgument("unknown denoiser mode '" + std::string(name) + "'");
}

std::vector<scene::Vec2> ProbeLattice::points() const {
  if (along < 1 || across < 1) throw InvalidArgument("probe lattice: empty");
  std::vector<scene::Vec2> out;
  out.reserve(size());
  for (int i = 0; i < along; ++i) {
    const double x = along == 1 ? 0.0 : ahead * i / (along - 1);
    for (int j = 0; j < across; ++j) {
      const double y = across == 1 ? 0.0 : -0.5 * lateral + lateral * j / (across - 1);
      out.push_back({x, y});
    }
  }
  return out;
}

Condition make_condition(const scene::SdfGrid& grid, double ego_speed, scene::Vec2 goal,
                         const ProbeLattice& lattice) {
  Condition c;
  c.ego_speed = ego_speed;
  c.goal = goal;
  for (const scene::Vec2& p : lattice.points()) c.probe_sdf.push_back(scene::sample_sdf(grid, p).value);
  return c;
}

Tensor encode_condition(const Condition& c) {
  Tensor out(1, static_cast<Eigen::Index>(3 + c.probe_sdf.size()));
  out(0, 0) = c.ego_speed / kSpeedScale;
  out(0, 1) = c.goal.x / kPositionScale;
  out(0, 2) = c.goal.y / kPositionScale;
  for (std::size_t k = 0; k < c.probe_sdf.size(); ++k) {
    out(0, static_cast<Eigen::Index>(3 + k)) = c.probe_sdf[k] / kSdfScale;
  }
  if (!out.allFinite()) throw InvalidArgument("condition: non-finite entry");
  return out;
}

void TimeEmbedding::validate() const {
  if (dim <= 0 || dim % 2 != 0) throw InvalidArgument("time embedding: dimension must be even");
}

Tensor TimeEmbedding::operator()(int t) const {
  const int half = dim / 2;
  Tensor out(1, dim);
  for (int k = 0; k < half; ++k) {
    const double f = std::pow(10000.0, -static_cast<double>(k) / half);
    out(0, k) = std::sin(t * f);
    out(0, half + k) = std::cos(t * f);
  }
  return out;
}

Tensor TimeEmbedding::batch(std::span<const int> ts) const {
  Tensor out(static_cast<Eigen::Index>(ts.size()), dim);
  for (std::size_t r = 0; r < ts.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = (*this)(ts[r]);
  return out;
}

Tensor normalize(const geometry::Trajectory& traj) {
  Tensor row(1, static_cast<Eigen::Index>(3 * traj.size()));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(3 * i);
    row(0, k) = traj.points[i].x / kPositionScale;
    row(0, k + 1) = traj.points[i].y / kPositionScale;
    row(0, k + 2) = traj.points[i].theta / std::numbers::pi;
  }
  return row;
}

geometry::Trajectory denormalize(const Tensor& row, double dt, bool wrap) {
  if (row.rows() != 1 || row.cols() % 3 != 0) {
    throw ShapeError("denormalize: expected a 1 x 3H row");
  }
  geometry::Trajectory t;
  t.dt = dt;
  for (Eigen::Index k = 0; k < row.cols(); k += 3) {
    const double theta = row(0, k + 2) * std::numbers::pi;
    t.points.push_back({row(0, k) * kPositionScale, row(0, k + 1) * kPositionScale,
                        wrap ? geometry::normalize_angle(theta) : theta});
  }
  return t;
}

std::size_t DenoiserParams::condition_dim() const {
  if (weights.empty()) return 0;
  return static_cast<std::size_t>(weights.front().rows()) - state_dim() -
         static_cast<std::size_t>(time.dim);
}

std::size_t DenoiserParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

std::vector<Tensor> DenoiserParams::flat() const {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

void DenoiserParams::assign(std::span<const Tensor> flat) {
  if (flat.size() != 2 * weights.size()) throw ShapeError("params: tensor count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (flat[2 * l].rows() != weights[l].rows() || flat[2 * l].cols() != weights[l].cols() ||
        flat[2 * l + 1].cols() != biases[l].cols()) {
      throw ShapeError("params: layer " + std::to_string(l) + " shape mismatch");
    }
    weights[l] = flat[2 * l];
    biases[l] = flat[2 * l + 1];
  }
}

void DenoiserParams::validate() const {
  time.validate();
  if (weights.empty() || weights.size() != biases.size()) {
    throw ShapeError("params: need matching weight and bias lists");
  }
  if (static_cast<std::size_t>(weights.front().rows()) <= state_dim() + static_cast<std::size_t>(time.dim)) {
    throw ShapeError("params: input layer too narrow for state and time embedding");
  }
  if (static_cast<std::size_t>(weights.back().cols()) != state_dim()) {
    throw ShapeError("params: output width must be 3H");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].rows() != 1 || biases[l].cols() != weights[l].cols()) {
      throw ShapeError("params: bias shape mismatch at layer " + std::to_string(l));
    }
    if (l > 0 && weights[l].rows() != weights[l - 1].cols()) {
      throw ShapeError("params: layer " + std::to_string(l) + " fan-in mismatch");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw NumericError("params: non-finite value at layer " + std::to_string(l));
    }
  }
}

std::uint64_t DenoiserParams::hash() const {
  Fnv1a h;
  h.update(mode_name(mode));
  h.update(static_cast<std::uint64_t>(horizon));
  h.update(static_cast<std::uint64_t>(time.dim));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h.update(static_cast<std::uint64_t>(weights[l].rows()));
    h.update(static_cast<std::uint64_t>(weights[l].cols()));
    h.update(std::span<const double>(weights[l].data(), static_cast<std::size_t>(weights[l].size())));
    h.update(std::span<const double>(biases[l].data(), static_cast<std::size_t>(biases[l].size())));
  }
  return h.digest();
}

DenoiserParams init_params(const NetworkShape& shape, Mode mode, std::uint64_t seed) {
  if (shape.horizon < 1 || shape.hidden_layers < 1 || shape.width < 1) {
    throw InvalidArgument("network shape: horizon, depth and width must be positive");
  }
  DenoiserParams p;
  p.mode = mode;
  p.horizon = shape.horizon;
  p.time.dim = shape.time_dim;
  p.time.validate();
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> sizes{static_cast<Eigen::Index>(shape.input_dim())};
  for (int l = 0; l < shape.hidden_layers; ++l) sizes.push_back(shape.width);
  sizes.push_back(static_cast<Eigen::Index>(shape.state_dim()));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor w(sizes[l], sizes[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Tensor::Zero(1, sizes[l + 1]));
  }
  return p;
}

namespace {

void check_inputs(const DenoiserParams& params, Eigen::Index rows, Eigen::Index cols,
                  std::span<const int> t, const Tensor& cond) {
  const std::size_t nt = t.size();
  for (int v : t) {
    if (v < 1) throw InvalidArgument("predict: timestep " + std::to_string(v) + " < 1");
  }
  if (cols != static_cast<Eigen::Index>(params.state_dim())) {
    throw ShapeError("predict: x_t has " + std::to_string(cols) + " columns, expected " +
                     std::to_string(params.state_dim()));
  }
  if (static_cast<std::size_t>(rows) != nt || cond.rows() != rows) {
    throw ShapeError("predict: batch sizes of x_t, t and condition differ");
  }
  if (cond.cols() != static_cast<Eigen::Index>(params.condition_dim())) {
    throw ShapeError("predict: condition has " + std::to_string(cond.cols()) +
                     " columns, expected " + std::to_string(params.condition_dim()));
  }
}

}  // namespace

Tensor predict(const DenoiserParams& params, const Tensor& x_t, std::span<const int> t,
               const Tensor& cond) {
  check_inputs(params, x_t.rows(), x_t.cols(), t, cond);
  Tensor h(x_t.rows(), params.weights.front().rows());
  h << x_t, params.time.batch(t), cond;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Tensor z = h * params.weights[l];
    z.rowwise() += params.biases[l].row(0);
    if (l + 1 < params.weights.size()) {
      h = z.unaryExpr([](double v) { return std::tanh(v); });
    } else {
      h = std::move(z);
    }
  }
  return h;
}

std::vector<dc::Var> BoundParams::flat() const {
  std::vector<dc::Var> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

BoundParams bind(dc::Tape& tape, const DenoiserParams& params, bool trainable) {
  BoundParams b;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    b.weights.push_back(trainable ? tape.leaf(params.weights[l]) : tape.constant(params.weights[l]));
    b.biases.push_back(trainable ? tape.leaf(params.biases[l]) : tape.constant(params.biases[l]));
  }
  return b;
}

dc::Var predict(const DenoiserParams& params, const BoundParams& bound, dc::Var x_t,
                std::span<const int> t, const Tensor& cond) {
  check_inputs(params, x_t.rows(), x_t.cols(), t, cond);
  dc::Tape& tape = *x_t.tape();
  const std::vector<dc::Var> parts{x_t, tape.constant(params.time.batch(t)), tape.constant(cond)};
  dc::Var h = dc::concat_cols(parts);
  for (std::size_t l = 0; l < bound.weights.size(); ++l) {
    h = dc::affine(h, bound.weights[l], bound.biases[l]);
    if (l + 1 < bound.weights.size()) h = dc::tanh(h);
  }
  return h;
}

Tensor eps_to_x0(const Tensor& x_t, const Tensor& eps, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw InvalidArgument("eps_to_x0: alpha_bar must lie in (0, 1]");
  }
  return (x_t - std::sqrt(1.0 - alpha_bar) * eps) / std::sqrt(alpha_bar);
}

Tensor x0_to_eps(const Tensor& x_t, const Tensor& x0, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw InvalidArgument("x0_to_eps: alpha_bar must lie in (0, 1)");
  }
  return (x_t - std::sqrt(alpha_bar) * x0) / std::sqrt(1.0 - alpha_bar);
}

}  // namespace feasplan::denoiser
