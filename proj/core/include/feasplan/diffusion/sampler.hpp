#pragma once

#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/diffusion/schedule.hpp"
#include "feasplan/geometry/trajectory.hpp"
#include "feasplan/scene/footprint.hpp"
#include "feasplan/scene/sdf.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace feasplan::diffusion {

struct GuidanceConfig {
  bool enabled = true;
  int steps_per_t = 3;               // K
  double eta = 0.5;                  // m per unit normalized gradient
  std::vector<double> eta_schedule;  // multiplier at index t - 1; empty means 1
  double heading_scale = 0.1;        // rho_theta
  scene::GuardedLossConfig guard;
  void validate() const;
  [[nodiscard]] double step_size(int t) const;
};

struct GuideOutcome {
  geometry::Trajectory trajectory;
  bool triggered = false;
  int steps = 0;
};

// Trigger fires when some footprint corner has SDF below max(m_safe,
// trigger_margin); otherwise the input is returned untouched. Metric
// coordinates in, metric coordinates out.
GuideOutcome guide_x0(const geometry::Trajectory& x0_hat, const scene::SdfGrid& grid,
                      const scene::Footprint& fp, const GuidanceConfig& cfg, int t);

enum class SamplerKind { deterministic, stochastic };

// Stochastic reverse process of one sample. states[k] is x_{T-k}; log_probs[k]
// and noises[k] belong to the transition x_{T-k} -> x_{T-k-1}.
struct DenoisingChain {
  std::vector<Tensor> states;
  std::vector<double> log_probs;
  std::vector<Tensor> noises;
  Tensor condition;
  std::uint64_t schedule_hash = 0;
  [[nodiscard]] int steps() const { return static_cast<int>(log_probs.size()); }
};

// Batched model output in the model's mode: (B x 3H) given (B x 3H) x_t at a
// shared timestep t.
struct Model {
  denoiser::Mode mode = denoiser::Mode::predict_x0;
  Eigen::Index state_dim = 0;
  std::function<Tensor(const Tensor& x_t, int t)> fn;
};
// Network model on fixed per-row conditions (copied). params must outlive the
// returned model.
Model network_model(const denoiser::DenoiserParams& params, Tensor conditions);

struct SampleStats {
  int guidance_calls = 0;
  int triggered_steps = 0;
  double predict_seconds = 0.0;
  double guidance_seconds = 0.0;
  double total_seconds = 0.0;
};

struct SampleOutput {
  geometry::Trajectory trajectory;
  std::optional<DenoisingChain> chain;
};

struct SampleRequest {
  SamplerKind kind = SamplerKind::deterministic;
  GuidanceConfig guidance;
  double dt = 0.5;
};

// Guidance context for one row; may be null when guidance is disabled.
struct GuidanceTarget {
  const scene::SdfGrid* grid = nullptr;
  scene::Footprint footprint;
};

// Reverse process for a batch. Row r draws all of its noise from a generator
// seeded with seeds[r]. conditions (B x C) are stored on returned chains.
std::vector<SampleOutput> sample_batch(const Model& model, const NoiseSchedule& schedule,
                                       const SampleRequest& request,
                                       std::span<const GuidanceTarget> targets,
                                       std::span<const std::uint64_t> seeds,
                                       const Tensor& conditions, SampleStats* stats = nullptr);

SampleOutput sample(const denoiser::DenoiserParams& params, const Tensor& condition,
                    const GuidanceTarget& target, const NoiseSchedule& schedule,
                    const SampleRequest& request, std::uint64_t seed,
                    SampleStats* stats = nullptr);

// Converts a model output to x0 space.
Tensor to_x0(denoiser::Mode mode, const Tensor& x_t, const Tensor& output, int t,
             const NoiseSchedule& s);

}  // namespace feasplan::diffusion
