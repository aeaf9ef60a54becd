#include "feasplan/diffusion/train.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/adam.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace feasplan::diffusion {

namespace dc = diffcore;

void TrainConfig::validate() const {
  if (!(lambda_cur >= 0.0)) throw InvalidArgument("train: lambda_cur must be >= 0");
  if (batch_size < 1 || steps < 1) throw InvalidArgument("train: batch_size and steps must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw InvalidArgument("train: final_lr_fraction must lie in (0, 1]");
  }
  if (!(lambda_warmup >= 0.0 && lambda_warmup <= 1.0)) {
    throw InvalidArgument("train: lambda_warmup must lie in [0, 1]");
  }
}

double TrainConfig::lambda_at(int step) const {
  const double ramp = lambda_warmup * steps;
  if (ramp <= 0.0 || step >= ramp) return lambda_cur;
  return lambda_cur * static_cast<double>(step) / ramp;
}

geometry::Positions metric_positions(dc::Var normalized) {
  const Eigen::Index h = normalized.cols() / 3;
  std::vector<Eigen::Index> xs(static_cast<std::size_t>(h));
  std::vector<Eigen::Index> ys(static_cast<std::size_t>(h));
  for (Eigen::Index i = 0; i < h; ++i) {
    xs[static_cast<std::size_t>(i)] = 3 * i;
    ys[static_cast<std::size_t>(i)] = 3 * i + 1;
  }
  return {dc::scale(dc::select_cols(normalized, xs), denoiser::kPositionScale),
          dc::scale(dc::select_cols(normalized, ys), denoiser::kPositionScale)};
}

BatchLoss training_loss(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                        const Tensor& x0, const Tensor& conditions, std::span<const int> t,
                        const Tensor& eps, const NoiseSchedule& schedule,
                        const geometry::CurvatureConfig& curvature, double dt, double lambda_cur) {
  const Eigen::Index b = x0.rows();
  Eigen::VectorXd s0(b);
  Eigen::VectorXd s1(b);
  for (Eigen::Index r = 0; r < b; ++r) {
    const double ab = schedule.abar(t[static_cast<std::size_t>(r)]);
    s0(r) = std::sqrt(ab);
    s1(r) = std::sqrt(1.0 - ab);
  }
  Tensor x_t = s0.asDiagonal() * x0 + s1.asDiagonal() * eps;
  dc::Tape& tape = *bound.weights.front().tape();
  dc::Var vx = tape.constant(x_t);
  dc::Var out = denoiser::predict(params, bound, vx, t, conditions);

  BatchLoss loss;
  dc::Var x0_hat = out;
  // Squared norm per sample, averaged over the batch.
  const double entries = static_cast<double>(x0.cols());
  if (params.mode == denoiser::Mode::predict_x0) {
    loss.reconstruction = dc::scale(dc::mean(dc::square(dc::sub(out, tape.constant(x0)))), entries);
  } else {
    loss.reconstruction = dc::scale(dc::mean(dc::square(dc::sub(out, tape.constant(eps)))), entries);
    Tensor c1 = s1.replicate(1, x0.cols());
    Tensor c0 = s0.cwiseInverse().replicate(1, x0.cols());
    x0_hat = dc::mul(dc::sub(vx, dc::mul(out, tape.constant(std::move(c1)))),
                     tape.constant(std::move(c0)));
  }
  if (lambda_cur > 0.0) {
    loss.curvature = geometry::curvature_loss(metric_positions(x0_hat), dt, curvature);
    loss.total = dc::add(loss.reconstruction, dc::scale(loss.curvature, lambda_cur));
  } else {
    loss.curvature = tape.constant(0.0);
    loss.total = loss.reconstruction;
  }
  return loss;
}

TrainResult train(std::span<const TrainingExample> data, const TrainConfig& cfg,
                  const NoiseSchedule& schedule, denoiser::DenoiserParams init,
                  const geometry::CurvatureConfig& curvature, double dt,
                  const TrainObserver& observer) {
  cfg.validate();
  curvature.validate();
  init.validate();
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  const auto d = static_cast<Eigen::Index>(init.state_dim());
  const auto c = static_cast<Eigen::Index>(init.condition_dim());
  for (const auto& ex : data) {
    if (ex.x0.cols() != d || ex.condition.cols() != c) {
      throw ShapeError("train: example shape does not match the network");
    }
  }

  TrainResult result{std::move(init), {}};
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<Tensor> params = result.params.flat();
  dc::AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  acfg.clip_norm = cfg.clip_norm;
  dc::Adam opt(acfg, params);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, schedule.steps);
  const auto b = static_cast<Eigen::Index>(cfg.batch_size);
  std::vector<std::size_t> ids(static_cast<std::size_t>(b));
  std::vector<int> ts(static_cast<std::size_t>(b));
  Tensor x0(b, d);
  Tensor cond(b, c);
  std::vector<Tensor> grads(params.size());

  for (int step = 0; step < cfg.steps; ++step) {
    for (Eigen::Index r = 0; r < b; ++r) {
      ids[static_cast<std::size_t>(r)] = pick(rng);
      ts[static_cast<std::size_t>(r)] = pick_t(rng);
      x0.row(r) = data[ids[static_cast<std::size_t>(r)]].x0;
      cond.row(r) = data[ids[static_cast<std::size_t>(r)]].condition;
    }
    const Tensor eps = standard_normal(rng, b, d);

    dc::Tape tape;
    const denoiser::BoundParams bound = denoiser::bind(tape, result.params, true);
    const BatchLoss loss = training_loss(result.params, bound, x0, cond, ts, eps, schedule,
                                         curvature, dt, cfg.lambda_at(step));
    const double value = loss.total.scalar();
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "train: non-finite loss at step " << step << "; t =";
      for (int t : ts) msg << ' ' << t;
      msg << "; batch ids =";
      for (std::size_t id : ids) msg << ' ' << id;
      throw NumericError(msg.str());
    }
    tape.backward(loss.total);
    const auto vars = bound.flat();
    for (std::size_t k = 0; k < vars.size(); ++k) grads[k] = vars[k].grad();

    const double frac = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 0.0;
    opt.step(params, grads, cfg.learning_rate * std::pow(cfg.final_lr_fraction, frac));
    result.params.assign(params);
    result.loss_trace.push_back(value);
    if (observer) observer(step, value);
  }
  return result;
}

}  // namespace feasplan::diffusion
