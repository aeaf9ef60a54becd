#include "feasplan/grpo/grpo.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace feasplan::grpo {

namespace dc = diffcore;

void GrpoConfig::validate() const {
  if (group_size < 2) throw InvalidArgument("grpo: group_size must be >= 2");
  if (!(eps_r > 0.0)) throw InvalidArgument("grpo: eps_r must be > 0");
  if (!(lambda_bc >= 0.0)) throw InvalidArgument("grpo: lambda_bc must be >= 0");
  if (reference_chains < 0) throw InvalidArgument("grpo: reference_chains must be >= 0");
  if (lambda_bc > 0.0 && reference_chains == 0) {
    throw InvalidArgument("grpo: lambda_bc > 0 needs reference_chains >= 1");
  }
  if (!(learning_rate > 0.0)) throw InvalidArgument("grpo: learning_rate must be > 0");
  if (iterations < 0) throw InvalidArgument("grpo: iterations must be >= 0");
  for (double w : step_weights) {
    if (!(w >= 0.0)) throw InvalidArgument("grpo: step weights must be >= 0");
  }
}

std::vector<double> GrpoConfig::weights(int steps) const {
  if (step_weights.empty()) return std::vector<double>(static_cast<std::size_t>(steps), 1.0 / steps);
  if (step_weights.size() != static_cast<std::size_t>(steps)) {
    throw InvalidArgument("grpo: step_weights has " + std::to_string(step_weights.size()) +
                          " entries, expected " + std::to_string(steps));
  }
  return step_weights;
}

namespace {

void check_chain(const DenoisingChain& chain, const diffusion::NoiseSchedule& schedule,
                 Eigen::Index dim, Eigen::Index cond_dim) {
  if (chain.schedule_hash != schedule.hash()) {
    throw InvalidArgument("chain_log_prob: chain was produced under a different noise schedule");
  }
  if (chain.states.size() != static_cast<std::size_t>(schedule.steps) + 1) {
    throw ShapeError("chain_log_prob: chain has " + std::to_string(chain.states.size()) +
                     " states, expected " + std::to_string(schedule.steps + 1));
  }
  for (const auto& s : chain.states) {
    if (s.rows() != 1 || s.cols() != dim) throw ShapeError("chain_log_prob: bad state shape");
  }
  if (chain.condition.rows() != 1 || chain.condition.cols() != cond_dim) {
    throw ShapeError("chain_log_prob: bad condition shape");
  }
}

// Weighted per-chain log-likelihood: out[b] = sum_t w_b[t-1] log pi(x_{t-1} | x_t, c_b).
// All transitions of all chains go through the network as one batch.
dc::Var stacked_log_prob(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                         std::span<const DenoisingChain* const> chains,
                         std::span<const std::span<const double>> w,
                         const diffusion::NoiseSchedule& schedule) {
  const auto dim = static_cast<Eigen::Index>(params.state_dim());
  const auto cdim = static_cast<Eigen::Index>(params.condition_dim());
  const int steps = schedule.steps;
  const auto b = static_cast<Eigen::Index>(chains.size());
  if (b == 0) throw InvalidArgument("chain_log_prob: no chains");
  const Eigen::Index n = b * steps;

  Tensor x_t(n, dim);
  Tensor target(n, dim);  // x_{t-1} - c_xt x_t
  Tensor cond(n, cdim);
  Tensor c_x0(n, dim);
  Tensor s_eps(n, dim);
  Tensor inv_s0(n, dim);
  Tensor quad(n, 1);
  Tensor offset(n, 1);
  Tensor gather = Tensor::Zero(b, n);
  std::vector<int> ts(static_cast<std::size_t>(n));

  for (Eigen::Index c = 0; c < b; ++c) {
    const DenoisingChain& chain = *chains[static_cast<std::size_t>(c)];
    check_chain(chain, schedule, dim, cdim);
    const auto& wc = w[static_cast<std::size_t>(c)];
    if (wc.size() != static_cast<std::size_t>(steps)) {
      throw ShapeError("chain_log_prob: expected one weight per step");
    }
    for (int k = 0; k < steps; ++k) {
      const int t = steps - k;
      const Eigen::Index r = c * steps + k;
      const auto pc = diffusion::posterior_coefficients(t, schedule);
      const double var = schedule.sigma2(t);
      const double ab = schedule.abar(t);
      ts[static_cast<std::size_t>(r)] = t;
      x_t.row(r) = chain.states[static_cast<std::size_t>(k)];
      target.row(r) = chain.states[static_cast<std::size_t>(k) + 1] - pc.c_xt * x_t.row(r);
      cond.row(r) = chain.condition;
      c_x0.row(r).setConstant(pc.c_x0);
      s_eps.row(r).setConstant(std::sqrt(1.0 - ab));
      inv_s0.row(r).setConstant(1.0 / std::sqrt(ab));
      quad(r, 0) = -0.5 / var;
      offset(r, 0) = -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * var);
      gather(c, r) = wc[static_cast<std::size_t>(t - 1)];
    }
  }

  dc::Tape& tape = *bound.weights.front().tape();
  const dc::Var vx = tape.constant(x_t);
  dc::Var x0_hat = denoiser::predict(params, bound, vx, ts, cond);
  if (params.mode == denoiser::Mode::predict_eps) {
    x0_hat = dc::mul(dc::sub(vx, dc::mul(x0_hat, tape.constant(std::move(s_eps)))),
                     tape.constant(std::move(inv_s0)));
  }
  const dc::Var resid = dc::sub(tape.constant(std::move(target)),
                                dc::mul(x0_hat, tape.constant(std::move(c_x0))));
  const dc::Var lp = dc::add(dc::mul(dc::row_sum(dc::square(resid)), tape.constant(std::move(quad))),
                             tape.constant(std::move(offset)));
  return dc::matmul(tape.constant(std::move(gather)), lp);
}

}  // namespace

dc::Var chain_log_prob(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                       std::span<const DenoisingChain> chains,
                       const diffusion::NoiseSchedule& schedule, std::span<const double> w) {
  std::vector<const DenoisingChain*> ptrs;
  std::vector<std::span<const double>> ws;
  for (const auto& c : chains) {
    ptrs.push_back(&c);
    ws.push_back(w);
  }
  return stacked_log_prob(params, bound, ptrs, ws, schedule);
}

double chain_log_prob(const denoiser::DenoiserParams& params, const DenoisingChain& chain,
                      const diffusion::NoiseSchedule& schedule, std::span<const double> w) {
  dc::Tape tape;
  const auto bound = denoiser::bind(tape, params, false);
  return chain_log_prob(params, bound, std::span(&chain, 1), schedule, w).value()(0, 0);
}

std::vector<double> step_log_probs(const denoiser::DenoiserParams& params,
                                   const DenoisingChain& chain,
                                   const diffusion::NoiseSchedule& schedule) {
  std::vector<double> out;
  dc::Tape tape;
  const auto bound = denoiser::bind(tape, params, false);
  for (int t = schedule.steps; t >= 1; --t) {
    std::vector<double> w(static_cast<std::size_t>(schedule.steps), 0.0);
    w[static_cast<std::size_t>(t - 1)] = 1.0;
    out.push_back(chain_log_prob(params, bound, std::span(&chain, 1), schedule, w).value()(0, 0));
  }
  return out;
}

dc::Var bc_loss(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                std::span<const DenoisingChain> ref_chains,
                const diffusion::NoiseSchedule& schedule) {
  const std::vector<double> ones(static_cast<std::size_t>(schedule.steps), 1.0);
  return dc::scale(dc::mean(chain_log_prob(params, bound, ref_chains, schedule, ones)), -1.0);
}

dc::Var grpo_loss(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                  std::span<const DenoisingChain> group, std::span<const double> advantages,
                  std::span<const DenoisingChain> ref_chains,
                  const diffusion::NoiseSchedule& schedule, const GrpoConfig& cfg) {
  if (advantages.size() != group.size()) {
    throw ShapeError("grpo_loss: one advantage per chain required");
  }
  const std::vector<double> w = cfg.weights(schedule.steps);
  const std::vector<double> ones(static_cast<std::size_t>(schedule.steps), 1.0);
  const bool use_bc = cfg.lambda_bc > 0.0 && !ref_chains.empty();

  std::vector<const DenoisingChain*> ptrs;
  std::vector<std::span<const double>> ws;
  std::vector<double> coef;
  const double g = static_cast<double>(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    ptrs.push_back(&group[i]);
    ws.push_back(w);
    coef.push_back(-advantages[i] / g);
  }
  if (use_bc) {
    const double r = static_cast<double>(ref_chains.size());
    for (const auto& c : ref_chains) {
      ptrs.push_back(&c);
      ws.push_back(ones);
      coef.push_back(-cfg.lambda_bc / r);
    }
  }
  const dc::Var lp = stacked_log_prob(params, bound, ptrs, ws, schedule);
  Tensor row = Eigen::Map<const Eigen::RowVectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  return dc::matmul(lp.tape()->constant(std::move(row)), lp);
}

std::vector<Tensor> grpo_gradient(const denoiser::DenoiserParams& params,
                                  std::span<const DenoisingChain> group,
                                  std::span<const double> advantages,
                                  std::span<const DenoisingChain> ref_chains,
                                  const diffusion::NoiseSchedule& schedule, const GrpoConfig& cfg,
                                  double* loss) {
  dc::Tape tape;
  const auto bound = denoiser::bind(tape, params, true);
  const dc::Var l = grpo_loss(params, bound, group, advantages, ref_chains, schedule, cfg);
  if (loss != nullptr) *loss = l.value()(0, 0);
  tape.backward(l);
  std::vector<Tensor> grads;
  for (const auto& v : bound.flat()) grads.push_back(v.grad());
  return grads;
}

namespace {

std::vector<DenoisingChain> draw_chains(const denoiser::DenoiserParams& params,
                                        const Tensor& condition, int count,
                                        std::uint64_t seed,
                                        const diffusion::NoiseSchedule& schedule, double dt,
                                        std::vector<geometry::Trajectory>* plans) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(mix_seed(seed, static_cast<std::uint64_t>(i)));
  Tensor conds = condition.replicate(count, 1);
  const auto model = diffusion::network_model(params, conds);
  diffusion::SampleRequest req;
  req.kind = diffusion::SamplerKind::stochastic;
  req.guidance.enabled = false;
  req.dt = dt;
  auto outs = diffusion::sample_batch(model, schedule, req, {}, seeds, conds);
  std::vector<DenoisingChain> chains;
  for (auto& o : outs) {
    chains.push_back(std::move(*o.chain));
    if (plans != nullptr) plans->push_back(std::move(o.trajectory));
  }
  return chains;
}

}  // namespace

GrpoResult grpo_train(const denoiser::DenoiserParams& init, const denoiser::DenoiserParams& ref,
                      std::span<const GrpoScene> scenes, const diffusion::NoiseSchedule& schedule,
                      const RewardConfig& rcfg, const GrpoConfig& cfg,
                      const geometry::CurvatureConfig& curvature, const scene::Footprint& fp,
                      double dt, const GrpoObserver& observer) {
  cfg.validate();
  rcfg.validate();
  curvature.validate();
  if (scenes.empty()) throw InvalidArgument("grpo: no training scenes");
  (void)cfg.weights(schedule.steps);

  GrpoResult result{init, {}};
  std::vector<Tensor> params = result.params.flat();
  dc::AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  acfg.clip_norm = cfg.clip_norm;
  dc::Adam opt(acfg, params);

  for (int it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t iseed = mix_seed(cfg.seed, static_cast<std::uint64_t>(it));
    const std::size_t si = mix_seed(iseed, 0) % scenes.size();
    const GrpoScene& gs = scenes[si];

    std::vector<geometry::Trajectory> plans;
    const auto group = draw_chains(result.params, gs.condition, cfg.group_size, mix_seed(iseed, 1),
                                   schedule, dt, &plans);
    std::vector<DenoisingChain> refs;
    if (cfg.lambda_bc > 0.0) {
      refs = draw_chains(ref, gs.condition, cfg.reference_chains, mix_seed(iseed, 2), schedule,
                         dt, nullptr);
    }

    GrpoRecord rec;
    rec.iteration = it;
    rec.scene_index = si;
    std::vector<double> rewards;
    for (const auto& p : plans) {
      const double task = task_reward(p, *gs.scene, *gs.grid, fp, rcfg);
      const double fea = feasibility_reward(p, curvature, rcfg);
      rewards.push_back(task + rcfg.lambda_fea * fea);
      rec.mean_task += task;
      rec.mean_feasibility += fea;
    }
    const double g = static_cast<double>(cfg.group_size);
    rec.mean_task /= g;
    rec.mean_feasibility /= g;
    for (double r : rewards) rec.mean_reward += r / g;
    for (double r : rewards) rec.reward_std += (r - rec.mean_reward) * (r - rec.mean_reward) / g;
    rec.reward_std = std::sqrt(rec.reward_std);

    const auto adv = group_advantages(rewards, cfg.eps_r);
    auto grads = grpo_gradient(result.params, group, adv, refs, schedule, cfg, &rec.loss);
    if (!std::isfinite(rec.loss)) {
      std::ostringstream msg;
      msg << "grpo: non-finite loss at iteration " << it << " on scene " << si;
      throw NumericError(msg.str());
    }
    opt.step(params, grads, cfg.learning_rate);
    result.params.assign(params);
    result.trace.push_back(rec);
    if (observer) observer(rec);
  }
  return result;
}

}  // namespace feasplan::grpo
