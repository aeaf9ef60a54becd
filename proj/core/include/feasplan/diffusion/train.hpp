#pragma once

#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/diffusion/schedule.hpp"
#include "feasplan/geometry/curvature.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace feasplan::diffusion {

struct TrainConfig {
  double lambda_cur = 1.0;
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 1e-3;
  // Step size decays exponentially to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.1;
  double clip_norm = 1.0;
  // lambda_cur ramps linearly from 0 over this fraction of the steps.
  double lambda_warmup = 0.5;
  std::uint64_t seed = 0;
  void validate() const;
  [[nodiscard]] double lambda_at(int step) const;
};

struct TrainingExample {
  Tensor x0;         // 1 x 3H, normalized
  Tensor condition;  // 1 x C, encoded
};

struct TrainResult {
  denoiser::DenoiserParams params;
  std::vector<double> loss_trace;
};

// Optional per-step observer (step index, loss).
using TrainObserver = std::function<void(int, double)>;

TrainResult train(std::span<const TrainingExample> data, const TrainConfig& cfg,
                  const NoiseSchedule& schedule, denoiser::DenoiserParams init,
                  const geometry::CurvatureConfig& curvature, double dt,
                  const TrainObserver& observer = {});

// Training objective on a fixed batch, recorded on the tape; exposed for tests.
struct BatchLoss {
  diffcore::Var total;
  diffcore::Var reconstruction;
  diffcore::Var curvature;
};
BatchLoss training_loss(const denoiser::DenoiserParams& params,
                        const denoiser::BoundParams& bound, const Tensor& x0,
                        const Tensor& conditions, std::span<const int> t, const Tensor& eps,
                        const NoiseSchedule& schedule, const geometry::CurvatureConfig& curvature,
                        double dt, double lambda_cur);

// Positions of a normalized (B x 3H) batch in meters, on the tape.
geometry::Positions metric_positions(diffcore::Var normalized);

}  // namespace feasplan::diffusion
