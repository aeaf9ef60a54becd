#include "feasplan/harness/pipeline.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/harness/workers.hpp"

#include <sstream>

namespace feasplan::harness {

std::uint64_t stream_seed(const RunConfig& cfg, SeedStream stream) {
  return mix_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

SuiteSpec train_suite_spec(const RunConfig& cfg) {
  SuiteSpec s;
  s.count = cfg.data.train_scenes;
  s.narrow = cfg.data.train_narrow;
  s.seed_base = cfg.data.train_seed_base;
  s.params = cfg.scene;
  s.cell = cfg.data.cell;
  return s;
}

SuiteSpec eval_suite_spec(const RunConfig& cfg) {
  SuiteSpec s;
  s.count = cfg.data.eval_scenes;
  s.narrow = cfg.data.eval_narrow;
  s.seed_base = cfg.data.eval_seed_base;
  s.params = cfg.scene;
  s.cell = cfg.data.cell;
  return s;
}

std::vector<SceneCase> build_train_suite(const RunConfig& cfg, int workers) {
  return build_suite(train_suite_spec(cfg), cfg.curvature, cfg.footprint, workers);
}

std::vector<SceneCase> build_eval_suite(const RunConfig& cfg, int workers) {
  return build_suite(eval_suite_spec(cfg), cfg.curvature, cfg.footprint, workers);
}

std::vector<diffusion::TrainingExample> training_examples(std::span<const SceneCase> cases) {
  std::vector<diffusion::TrainingExample> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back({denoiser::normalize(c.expert), c.encoded});
  return out;
}

diffusion::TrainResult train_model(const RunConfig& cfg, std::span<const SceneCase> cases,
                                   const diffusion::TrainObserver& observer) {
  cfg.validate();
  diffusion::TrainConfig tcfg = cfg.train;
  tcfg.seed = stream_seed(cfg, SeedStream::train);
  const auto data = training_examples(cases);
  auto init = denoiser::init_params(cfg.network_shape(), cfg.model.mode,
                                    stream_seed(cfg, SeedStream::init));
  return diffusion::train(data, tcfg, cfg.make_schedule(), std::move(init), cfg.curvature,
                          cfg.scene.dt, observer);
}

grpo::GrpoResult finetune_model(const RunConfig& cfg, const denoiser::DenoiserParams& il,
                                std::span<const SceneCase> cases,
                                const grpo::GrpoObserver& observer) {
  cfg.validate();
  grpo::GrpoConfig gcfg = cfg.grpo;
  gcfg.seed = stream_seed(cfg, SeedStream::grpo);
  std::vector<grpo::GrpoScene> scenes;
  scenes.reserve(cases.size());
  for (const auto& c : cases) scenes.push_back({&c.scene, &c.grid, c.encoded});
  return grpo::grpo_train(il, il, scenes, cfg.make_schedule(), cfg.reward, gcfg, cfg.curvature,
                          cfg.footprint, cfg.scene.dt, observer);
}

std::uint64_t scene_sample_seed(const RunConfig& cfg, std::uint64_t scene_seed) {
  return mix_seed(mix_seed(stream_seed(cfg, SeedStream::sample), cfg.eval.sample_seed), scene_seed);
}

std::vector<Plan> plan_suite(const denoiser::DenoiserParams& params, std::span<const SceneCase> cases,
                             const RunConfig& cfg, int workers) {
  const auto schedule = cfg.make_schedule();
  diffusion::SampleRequest req;
  req.kind = cfg.eval.sampler;
  req.guidance = cfg.guidance;
  req.dt = cfg.scene.dt;
  std::vector<Plan> out(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const SceneCase& c = cases[i];
    Plan& p = out[i];
    p.trajectory = diffusion::sample(params, c.encoded, {&c.grid, cfg.footprint}, schedule, req,
                                     scene_sample_seed(cfg, c.scene.seed), &p.stats)
                       .trajectory;
  });
  return out;
}

}  // namespace feasplan::harness

namespace feasplan::harness {

denoiser::CheckpointMeta checkpoint_meta(const RunConfig& cfg) {
  return {cfg.make_schedule().hash(), config_hash(cfg), cfg.seed};
}

denoiser::Checkpoint load_model(const std::string& path, const RunConfig& cfg) {
  auto ck = denoiser::load_checkpoint(path);
  const auto expected = cfg.make_schedule().hash();
  if (ck.meta.schedule_hash != expected) {
    throw InvalidArgument("checkpoint " + path + " was trained with schedule " +
                          hex64(ck.meta.schedule_hash) + ", config schedule is " + hex64(expected));
  }
  const auto shape = cfg.network_shape();
  if (ck.params.horizon != shape.horizon || ck.params.condition_dim() != shape.condition_dim) {
    throw InvalidArgument("checkpoint " + path + " does not match the configured horizon or condition");
  }
  return ck;
}

std::string checkpoint_text(const denoiser::DenoiserParams& params, const denoiser::CheckpointMeta& meta) {
  std::ostringstream os;
  denoiser::write_checkpoint(os, params, meta);
  return os.str();
}

}  // namespace feasplan::harness
