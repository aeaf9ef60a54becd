#include "feasplan/diffusion/schedule.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"

#include <cmath>
#include <numbers>

namespace feasplan::diffusion {

std::string_view schedule_name(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "linear";
}

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "linear") return ScheduleKind::linear;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

double NoiseSchedule::sigma2(int t) const {
  if (t < 1 || t > steps) throw InvalidArgument("schedule: timestep out of range");
  if (t == 1) return kFinalStepVariance;
  return beta(t) * (1.0 - abar(t - 1)) / (1.0 - abar(t));
}

std::uint64_t NoiseSchedule::hash() const {
  Fnv1a h;
  h.update(schedule_name(kind));
  h.update(static_cast<std::uint64_t>(steps));
  h.update(std::span<const double>(alpha_bar));
  return h.digest();
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
  if (steps < 2) throw InvalidArgument("make_schedule: need T >= 2, got " + std::to_string(steps));
  NoiseSchedule s;
  s.steps = steps;
  s.kind = kind;
  s.alpha_bar.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  constexpr double lo = 1e-4;
  constexpr double hi = 1.0 - 1e-4;
  if (kind == ScheduleKind::cosine) {
    constexpr double off = 0.008;
    auto f = [&](double u) {
      const double c = std::cos((u + off) / (1.0 + off) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0.0);
    for (int t = 1; t <= steps; ++t) {
      const double raw = std::clamp(f(static_cast<double>(t) / steps) / f0, 0.0, 1.0);
      // Affine map into [lo, hi] keeps strict monotonicity where clipping would tie.
      s.alpha_bar[static_cast<std::size_t>(t)] = lo + (hi - lo) * raw;
    }
  } else {
    // Betas from 1e-4 to 0.02 at T = 1000, rescaled to the requested T.
    const double scale = 1000.0 / steps;
    double prod = 1.0;
    for (int t = 1; t <= steps; ++t) {
      const double frac = static_cast<double>(t - 1) / (steps - 1);
      const double beta = std::min(0.999, scale * (1e-4 + (0.02 - 1e-4) * frac));
      prod *= 1.0 - beta;
      s.alpha_bar[static_cast<std::size_t>(t)] = lo + (hi - lo) * prod;
    }
  }
  for (int t = 1; t <= steps; ++t) {
    if (!(s.alpha_bar[static_cast<std::size_t>(t)] < s.alpha_bar[static_cast<std::size_t>(t - 1)])) {
      throw InvalidArgument("make_schedule: alpha_bar not strictly decreasing at t = " +
                            std::to_string(t));
    }
  }
  return s;
}

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s) {
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) {
    throw ShapeError("forward_diffuse: x0 and eps shapes differ");
  }
  if (t < 0 || t > s.steps) throw InvalidArgument("forward_diffuse: timestep out of range");
  return std::sqrt(s.abar(t)) * x0 + std::sqrt(1.0 - s.abar(t)) * eps;
}

Tensor ddim_step(const Tensor& x_t, const Tensor& x0_hat, int t, int t_next,
                 const NoiseSchedule& s) {
  if (!(t_next < t)) throw InvalidArgument("ddim_step: t_next must be below t");
  if (t > s.steps || t_next < 0) throw InvalidArgument("ddim_step: timestep out of range");
  if (t_next == 0) return x0_hat;
  const Tensor eps = (x_t - std::sqrt(s.abar(t)) * x0_hat) / std::sqrt(1.0 - s.abar(t));
  return std::sqrt(s.abar(t_next)) * x0_hat + std::sqrt(1.0 - s.abar(t_next)) * eps;
}

PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& s) {
  if (t < 1 || t > s.steps) throw InvalidArgument("posterior: timestep out of range");
  const double denom = 1.0 - s.abar(t);
  return {std::sqrt(s.abar(t - 1)) * s.beta(t) / denom,
          std::sqrt(s.alpha(t)) * (1.0 - s.abar(t - 1)) / denom};
}

Tensor posterior_mean(const Tensor& x_t, const Tensor& x0_hat, int t, const NoiseSchedule& s) {
  const auto c = posterior_coefficients(t, s);
  return c.c_x0 * x0_hat + c.c_xt * x_t;
}

Eigen::VectorXd gaussian_log_density(const Tensor& x, const Tensor& mean, double sigma2) {
  const double d = static_cast<double>(x.cols());
  const Eigen::VectorXd sq = (x - mean).rowwise().squaredNorm();
  return (-0.5 / sigma2) * sq.array() - 0.5 * d * std::log(2.0 * std::numbers::pi * sigma2);
}

AncestralStep ddpm_step(const Tensor& x_t, const Tensor& x0_hat, int t, const NoiseSchedule& s,
                        const Tensor& noise) {
  if (noise.rows() != x_t.rows() || noise.cols() != x_t.cols()) {
    throw ShapeError("ddpm_step: noise shape differs from x_t");
  }
  const double var = s.sigma2(t);
  const Tensor mean = posterior_mean(x_t, x0_hat, t, s);
  AncestralStep out;
  out.x_prev = mean + std::sqrt(var) * noise;
  out.log_prob = gaussian_log_density(out.x_prev, mean, var);
  return out;
}

Tensor standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = n(rng);
  }
  return out;
}

}  // namespace feasplan::diffusion
