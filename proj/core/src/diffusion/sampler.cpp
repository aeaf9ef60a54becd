#include "feasplan/diffusion/sampler.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <chrono>
#include <cmath>

namespace feasplan::diffusion {

namespace dc = diffcore;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void GuidanceConfig::validate() const {
  if (steps_per_t < 0) throw InvalidArgument("guidance: steps_per_t must be >= 0");
  if (!(eta >= 0.0)) throw InvalidArgument("guidance: eta must be >= 0");
  if (!(heading_scale >= 0.0)) throw InvalidArgument("guidance: heading_scale must be >= 0");
  if (!(guard.m_safe >= 0.0) || !(guard.trigger_margin >= 0.0)) {
    throw InvalidArgument("guidance: m_safe and trigger_margin must be >= 0");
  }
  for (double m : eta_schedule) {
    if (!(m >= 0.0)) throw InvalidArgument("guidance: eta_schedule entries must be >= 0");
  }
}

double GuidanceConfig::step_size(int t) const {
  if (eta_schedule.empty()) return eta;
  const auto i = static_cast<std::size_t>(t - 1);
  if (i >= eta_schedule.size()) throw InvalidArgument("guidance: eta_schedule shorter than T");
  return eta * eta_schedule[i];
}

GuideOutcome guide_x0(const geometry::Trajectory& x0_hat, const scene::SdfGrid& grid,
                      const scene::Footprint& fp, const GuidanceConfig& cfg, int t) {
  GuideOutcome out{x0_hat, false, 0};
  const double threshold = std::max(cfg.guard.m_safe, cfg.guard.trigger_margin);
  if (cfg.steps_per_t == 0 || !(scene::min_footprint_sdf(x0_hat, grid, fp) < threshold)) {
    return out;
  }
  out.triggered = true;
  const double eta = cfg.step_size(t);
  const auto h = static_cast<Eigen::Index>(x0_hat.size());
  for (int k = 0; k < cfg.steps_per_t; ++k) {
    Tensor x(1, h);
    Tensor y(1, h);
    Tensor th(1, h);
    for (Eigen::Index i = 0; i < h; ++i) {
      const auto& p = out.trajectory.points[static_cast<std::size_t>(i)];
      x(0, i) = p.x;
      y(0, i) = p.y;
      th(0, i) = p.theta;
    }
    dc::Tape tape;
    dc::Var vx = tape.leaf(std::move(x));
    dc::Var vy = tape.leaf(std::move(y));
    dc::Var vt = tape.leaf(std::move(th));
    tape.backward(scene::drivable_loss(grid, fp, cfg.guard, vx, vy, vt));
    const Tensor& gx = vx.grad();
    const Tensor& gy = vy.grad();
    const Tensor& gt = vt.grad();
    const double rms = std::sqrt((gx.squaredNorm() + gy.squaredNorm()) / static_cast<double>(h));
    if (!(rms > 0.0) || !std::isfinite(rms)) break;
    for (Eigen::Index i = 0; i < h; ++i) {
      auto& p = out.trajectory.points[static_cast<std::size_t>(i)];
      p.x -= eta * gx(0, i) / rms;
      p.y -= eta * gy(0, i) / rms;
      p.theta -= eta * cfg.heading_scale * gt(0, i) / rms;
    }
    ++out.steps;
  }
  return out;
}

Model network_model(const denoiser::DenoiserParams& params, Tensor conditions) {
  Model m;
  m.mode = params.mode;
  m.state_dim = static_cast<Eigen::Index>(params.state_dim());
  m.fn = [&params, cond = std::move(conditions)](const Tensor& x_t, int t) {
    const std::vector<int> ts(static_cast<std::size_t>(x_t.rows()), t);
    return denoiser::predict(params, x_t, ts, cond);
  };
  return m;
}

Tensor to_x0(denoiser::Mode mode, const Tensor& x_t, const Tensor& output, int t,
             const NoiseSchedule& s) {
  if (mode == denoiser::Mode::predict_x0) return output;
  return denoiser::eps_to_x0(x_t, output, s.abar(t));
}

std::vector<SampleOutput> sample_batch(const Model& model, const NoiseSchedule& schedule,
                                       const SampleRequest& request,
                                       std::span<const GuidanceTarget> targets,
                                       std::span<const std::uint64_t> seeds,
                                       const Tensor& conditions, SampleStats* stats) {
  const auto start = Clock::now();
  const auto batch = static_cast<Eigen::Index>(seeds.size());
  if (batch == 0) throw InvalidArgument("sample: empty batch");
  if (request.guidance.enabled) {
    request.guidance.validate();
    if (targets.size() != seeds.size()) {
      throw InvalidArgument("sample: guidance needs one target per row");
    }
  }
  SampleStats local;
  std::vector<std::mt19937_64> rngs;
  for (std::uint64_t s : seeds) rngs.emplace_back(s);

  const Eigen::Index dim = model.state_dim;
  if (dim <= 0) throw InvalidArgument("sample: model state dimension unset");
  Tensor x(batch, dim);
  for (Eigen::Index r = 0; r < batch; ++r) {
    x.row(r) = standard_normal(rngs[static_cast<std::size_t>(r)], 1, dim);
  }

  const bool stochastic = request.kind == SamplerKind::stochastic;
  std::vector<SampleOutput> out(static_cast<std::size_t>(batch));
  if (stochastic) {
    for (Eigen::Index r = 0; r < batch; ++r) {
      DenoisingChain c;
      c.states.push_back(x.row(r));
      if (conditions.rows() == batch) c.condition = conditions.row(r);
      c.schedule_hash = schedule.hash();
      out[static_cast<std::size_t>(r)].chain = std::move(c);
    }
  }

  const bool guide = request.guidance.enabled;
  for (int t = schedule.steps; t >= 1; --t) {
    auto tp = Clock::now();
    Tensor x0 = to_x0(model.mode, x, model.fn(x, t), t, schedule);
    local.predict_seconds += seconds_since(tp);

    if (guide) {
      const auto tg = Clock::now();
      for (Eigen::Index r = 0; r < batch; ++r) {
        const GuidanceTarget& target = targets[static_cast<std::size_t>(r)];
        if (target.grid == nullptr) continue;
        ++local.guidance_calls;
        const auto traj = denoiser::denormalize(x0.row(r), request.dt, false);
        const GuideOutcome g = guide_x0(traj, *target.grid, target.footprint, request.guidance, t);
        if (g.triggered) {
          ++local.triggered_steps;
          x0.row(r) = denoiser::normalize(g.trajectory);
        }
      }
      local.guidance_seconds += seconds_since(tg);
    }

    if (stochastic) {
      Tensor noise(batch, dim);
      for (Eigen::Index r = 0; r < batch; ++r) {
        noise.row(r) = standard_normal(rngs[static_cast<std::size_t>(r)], 1, dim);
      }
      AncestralStep step = ddpm_step(x, x0, t, schedule, noise);
      x = std::move(step.x_prev);
      for (Eigen::Index r = 0; r < batch; ++r) {
        DenoisingChain& c = *out[static_cast<std::size_t>(r)].chain;
        c.states.push_back(x.row(r));
        c.noises.push_back(noise.row(r));
        c.log_probs.push_back(step.log_prob(r));
      }
    } else {
      x = ddim_step(x, x0, t, t - 1, schedule);
    }
    if (!x.allFinite()) {
      throw NumericError("sample: non-finite state after reverse step t = " + std::to_string(t));
    }
  }
  for (Eigen::Index r = 0; r < batch; ++r) {
    out[static_cast<std::size_t>(r)].trajectory = denoiser::denormalize(x.row(r), request.dt, true);
  }
  local.total_seconds = seconds_since(start);
  if (stats != nullptr) {
    stats->guidance_calls += local.guidance_calls;
    stats->triggered_steps += local.triggered_steps;
    stats->predict_seconds += local.predict_seconds;
    stats->guidance_seconds += local.guidance_seconds;
    stats->total_seconds += local.total_seconds;
  }
  return out;
}

SampleOutput sample(const denoiser::DenoiserParams& params, const Tensor& condition,
                    const GuidanceTarget& target, const NoiseSchedule& schedule,
                    const SampleRequest& request, std::uint64_t seed, SampleStats* stats) {
  const Model model = network_model(params, condition);
  const std::uint64_t seeds[] = {seed};
  const GuidanceTarget targets[] = {target};
  return std::move(sample_batch(model, schedule, request, targets, seeds, condition, stats).front());
}

}  // namespace feasplan::diffusion
