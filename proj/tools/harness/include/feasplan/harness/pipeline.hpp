#pragma once

#include "feasplan/diffusion/sampler.hpp"
#include "feasplan/diffusion/train.hpp"
#include "feasplan/grpo/grpo.hpp"
#include "feasplan/harness/config.hpp"
#include "feasplan/harness/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace feasplan::harness {

// Child seeds of RunConfig::seed.
enum class SeedStream : std::uint64_t { init = 0, train = 1, grpo = 2, sample = 3 };
std::uint64_t stream_seed(const RunConfig& cfg, SeedStream stream);

SuiteSpec train_suite_spec(const RunConfig& cfg);
SuiteSpec eval_suite_spec(const RunConfig& cfg);
std::vector<SceneCase> build_train_suite(const RunConfig& cfg, int workers);
std::vector<SceneCase> build_eval_suite(const RunConfig& cfg, int workers);

std::vector<diffusion::TrainingExample> training_examples(std::span<const SceneCase> cases);

diffusion::TrainResult train_model(const RunConfig& cfg, std::span<const SceneCase> cases,
                                   const diffusion::TrainObserver& observer = {});

grpo::GrpoResult finetune_model(const RunConfig& cfg, const denoiser::DenoiserParams& il,
                                std::span<const SceneCase> cases,
                                const grpo::GrpoObserver& observer = {});

// Seed of the sampler for one scene; independent of worker count and order.
std::uint64_t scene_sample_seed(const RunConfig& cfg, std::uint64_t scene_seed);

struct Plan {
  geometry::Trajectory trajectory;
  diffusion::SampleStats stats;
};

// One plan per case using cfg.guidance and cfg.eval.sampler.
std::vector<Plan> plan_suite(const denoiser::DenoiserParams& params, std::span<const SceneCase> cases,
                             const RunConfig& cfg, int workers);

}  // namespace feasplan::harness

namespace feasplan::harness {

// Metadata stamped on checkpoints written under cfg.
denoiser::CheckpointMeta checkpoint_meta(const RunConfig& cfg);
// Loads a checkpoint and refuses it when its schedule or network does not
// match cfg.
denoiser::Checkpoint load_model(const std::string& path, const RunConfig& cfg);
std::string checkpoint_text(const denoiser::DenoiserParams& params, const denoiser::CheckpointMeta& meta);

}  // namespace feasplan::harness
