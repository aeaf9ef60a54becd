#pragma once

#include "feasplan/diffcore/tape.hpp"

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace feasplan::diffusion {

using diffcore::Tensor;

enum class ScheduleKind { cosine, linear };

std::string_view schedule_name(ScheduleKind kind);
ScheduleKind parse_schedule(std::string_view name);

// Variance used for the final (t = 1) ancestral step.
inline constexpr double kFinalStepVariance = 1e-6;

struct NoiseSchedule {
  int steps = 0;  // T
  ScheduleKind kind = ScheduleKind::cosine;
  std::vector<double> alpha_bar;  // index 0..T, alpha_bar[0] = 1

  [[nodiscard]] double abar(int t) const { return alpha_bar[static_cast<std::size_t>(t)]; }
  [[nodiscard]] double beta(int t) const { return 1.0 - abar(t) / abar(t - 1); }
  [[nodiscard]] double alpha(int t) const { return abar(t) / abar(t - 1); }
  // Posterior variance of x_{t-1} given x_t and x0; kFinalStepVariance at t = 1.
  [[nodiscard]] double sigma2(int t) const;
  [[nodiscard]] std::uint64_t hash() const;
};

NoiseSchedule make_schedule(int steps, ScheduleKind kind = ScheduleKind::cosine);

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, rowwise on (B x D) tensors.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s);

// Deterministic update to t_next (< t); t_next = 0 returns x0_hat.
Tensor ddim_step(const Tensor& x_t, const Tensor& x0_hat, int t, int t_next,
                 const NoiseSchedule& s);

// Posterior mean coefficients: mean = c_x0 * x0_hat + c_xt * x_t.
struct PosteriorCoefficients {
  double c_x0 = 0.0;
  double c_xt = 0.0;
};
PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& s);
Tensor posterior_mean(const Tensor& x_t, const Tensor& x0_hat, int t, const NoiseSchedule& s);

// Per-row log N(x; mean, sigma2 I).
Eigen::VectorXd gaussian_log_density(const Tensor& x, const Tensor& mean, double sigma2);

struct AncestralStep {
  Tensor x_prev;
  Eigen::VectorXd log_prob;  // one per row
};
// x_{t-1} = mean + sigma_t * noise.
AncestralStep ddpm_step(const Tensor& x_t, const Tensor& x0_hat, int t, const NoiseSchedule& s,
                        const Tensor& noise);

Tensor standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace feasplan::diffusion
