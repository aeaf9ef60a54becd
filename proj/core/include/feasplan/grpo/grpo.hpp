#pragma once

#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/diffcore/adam.hpp"
#include "feasplan/diffusion/sampler.hpp"
#include "feasplan/diffusion/schedule.hpp"
#include "feasplan/geometry/curvature.hpp"
#include "feasplan/scene/footprint.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace feasplan::grpo {

using diffcore::Tensor;
using diffusion::DenoisingChain;

struct RewardConfig {
  double lambda_fea = 0.5;
  double progress_weight = 1.0;  // exponent on the progress ratio
  double a_long_max = 4.0;       // m/s^2
  double feasible_reward = 1.0;
  double infeasible_reward = 0.0;
  void validate() const;
};

// Fraction of the start-to-goal centerline arc length covered by the final
// waypoint, clamped to [0, 1].
double progress_ratio(const geometry::Trajectory& traj, const scene::Scene& scene);
// Largest |dv/dt| along the plan, with speeds measured from the start pose.
double max_longitudinal_accel(const geometry::Trajectory& traj, const scene::Scene& scene);

double task_reward(const geometry::Trajectory& traj, const scene::Scene& scene,
                   const scene::SdfGrid& grid, const scene::Footprint& fp,
                   const RewardConfig& rcfg);
double feasibility_reward(const geometry::Trajectory& traj, const geometry::CurvatureConfig& cfg,
                          const RewardConfig& rcfg = {});
double total_reward(const geometry::Trajectory& traj, const scene::Scene& scene,
                    const scene::SdfGrid& grid, const scene::Footprint& fp,
                    const geometry::CurvatureConfig& curvature, const RewardConfig& rcfg);

// (r - mean) / (population std + eps_r).
std::vector<double> group_advantages(std::span<const double> rewards, double eps_r);

struct GrpoConfig {
  int group_size = 8;
  std::vector<double> step_weights;  // w_t at index t - 1; empty means 1/T
  double eps_r = 1e-6;
  double lambda_bc = 0.1;
  int reference_chains = 2;
  double learning_rate = 1e-5;
  double clip_norm = 1.0;
  int iterations = 200;
  std::uint64_t seed = 0;
  void validate() const;
  [[nodiscard]] std::vector<double> weights(int steps) const;
};

// Per-chain sum_t w_t log pi_theta(x_{t-1} | x_t, c) as a (B x 1) tape value,
// with w indexed by t - 1.
diffcore::Var chain_log_prob(const denoiser::DenoiserParams& params,
                             const denoiser::BoundParams& bound,
                             std::span<const DenoisingChain> chains,
                             const diffusion::NoiseSchedule& schedule, std::span<const double> w);
// Value-only convenience for a single chain.
double chain_log_prob(const denoiser::DenoiserParams& params, const DenoisingChain& chain,
                      const diffusion::NoiseSchedule& schedule, std::span<const double> w);
// Per-step log densities of a chain under params (index k is the transition
// out of states[k]).
std::vector<double> step_log_probs(const denoiser::DenoiserParams& params,
                                   const DenoisingChain& chain,
                                   const diffusion::NoiseSchedule& schedule);

// -mean over chains of the unweighted chain log-likelihood.
diffcore::Var bc_loss(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                      std::span<const DenoisingChain> ref_chains,
                      const diffusion::NoiseSchedule& schedule);

// L_RL + lambda_bc L_BC for one group, advantages treated as constants.
diffcore::Var grpo_loss(const denoiser::DenoiserParams& params, const denoiser::BoundParams& bound,
                        std::span<const DenoisingChain> group, std::span<const double> advantages,
                        std::span<const DenoisingChain> ref_chains,
                        const diffusion::NoiseSchedule& schedule, const GrpoConfig& cfg);

// Gradient of grpo_loss with respect to the flattened parameters.
std::vector<Tensor> grpo_gradient(const denoiser::DenoiserParams& params,
                                  std::span<const DenoisingChain> group,
                                  std::span<const double> advantages,
                                  std::span<const DenoisingChain> ref_chains,
                                  const diffusion::NoiseSchedule& schedule, const GrpoConfig& cfg,
                                  double* loss = nullptr);

struct GrpoScene {
  const scene::Scene* scene = nullptr;
  const scene::SdfGrid* grid = nullptr;
  Tensor condition;  // 1 x C
};

struct GrpoRecord {
  int iteration = 0;
  std::size_t scene_index = 0;
  double mean_reward = 0.0;
  double reward_std = 0.0;
  double mean_task = 0.0;
  double mean_feasibility = 0.0;
  double loss = 0.0;
};

struct GrpoResult {
  denoiser::DenoiserParams params;
  std::vector<GrpoRecord> trace;
};

using GrpoObserver = std::function<void(const GrpoRecord&)>;

// Single-update group-relative fine-tuning: each iteration samples a group on
// one scene with the stochastic sampler (guidance off), scores it, and applies
// one optimizer step.
GrpoResult grpo_train(const denoiser::DenoiserParams& init, const denoiser::DenoiserParams& ref,
                      std::span<const GrpoScene> scenes, const diffusion::NoiseSchedule& schedule,
                      const RewardConfig& rcfg, const GrpoConfig& cfg,
                      const geometry::CurvatureConfig& curvature, const scene::Footprint& fp,
                      double dt, const GrpoObserver& observer = {});

}  // namespace feasplan::grpo
