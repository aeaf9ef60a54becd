#pragma once

#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/diffusion/sampler.hpp"
#include "feasplan/diffusion/schedule.hpp"
#include "feasplan/diffusion/train.hpp"
#include "feasplan/geometry/curvature.hpp"
#include "feasplan/grpo/grpo.hpp"
#include "feasplan/scene/scene.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace feasplan::harness {

struct ScheduleSettings {
  int steps = 50;
  diffusion::ScheduleKind kind = diffusion::ScheduleKind::cosine;
};

struct ModelSettings {
  denoiser::Mode mode = denoiser::Mode::predict_x0;
  int hidden_layers = 4;
  int width = 256;
  int time_dim = 32;
};

struct DataSettings {
  std::size_t train_scenes = 400;
  std::size_t train_narrow = 120;  // the last train_narrow scenes use narrow_params
  std::uint64_t train_seed_base = 1'000'000;
  std::size_t eval_scenes = 200;
  std::size_t eval_narrow = 60;
  std::uint64_t eval_seed_base = 2'000'000;
  double cell = 0.2;  // m
};

struct EvalSettings {
  diffusion::SamplerKind sampler = diffusion::SamplerKind::deterministic;
  std::uint64_t sample_seed = 0;
};

// Every field has a default; text form is `[section]` headers followed by
// `key = value` lines.
struct RunConfig {
  std::uint64_t seed = 0;
  scene::SceneParams scene;
  geometry::CurvatureConfig curvature;
  scene::Footprint footprint;
  ScheduleSettings schedule;
  ModelSettings model;
  DataSettings data;
  diffusion::TrainConfig train;
  diffusion::GuidanceConfig guidance;
  grpo::GrpoConfig grpo;
  grpo::RewardConfig reward;
  EvalSettings eval;

  void validate() const;
  [[nodiscard]] denoiser::NetworkShape network_shape() const;
  [[nodiscard]] diffusion::NoiseSchedule make_schedule() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
// Canonical text: every key in a fixed order with shortest round-trip values.
std::string to_text(const RunConfig& cfg);
// `section.key=value`; unknown keys and malformed values throw.
void apply_override(RunConfig& cfg, std::string_view assignment);
std::uint64_t config_hash(const RunConfig& cfg);
// All dotted keys, in canonical order.
std::vector<std::string> config_keys();

}  // namespace feasplan::harness
