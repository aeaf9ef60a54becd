#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/diffusion/sampler.hpp"
#include "feasplan/diffusion/schedule.hpp"
#include "feasplan/geometry/curvature.hpp"
#include "feasplan/grpo/grpo.hpp"
#include "feasplan/harness/dataset.hpp"
#include "feasplan/scene/footprint.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"

#include <benchmark/benchmark.h>

namespace df = feasplan::diffusion;
namespace dn = feasplan::denoiser;
namespace geo = feasplan::geometry;
namespace gr = feasplan::grpo;
namespace hs = feasplan::harness;
namespace sc = feasplan::scene;

namespace {

const hs::SceneCase& bench_case() {
  static const hs::SceneCase c = hs::make_case(sc::generate_scene(1, sc::SceneParams{}));
  return c;
}

const dn::DenoiserParams& bench_params() {
  static const dn::DenoiserParams p = dn::init_params(dn::NetworkShape{}, dn::Mode::predict_x0, 7);
  return p;
}

}  // namespace

static void BM_CurvatureLoss(benchmark::State& state) {
  const auto gen = sc::generate_scene(1, sc::SceneParams{});
  const geo::CurvatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(geo::curvature_loss(gen.expert, cfg));
}
BENCHMARK(BM_CurvatureLoss);

static void BM_BuildSdf(benchmark::State& state) {
  const auto gen = sc::generate_scene(1, sc::SceneParams{});
  for (auto _ : state) benchmark::DoNotOptimize(sc::build_sdf(gen.scene, 0.2));
}
BENCHMARK(BM_BuildSdf)->Unit(benchmark::kMillisecond);

static void BM_BuildSdfFast(benchmark::State& state) {
  const auto gen = sc::generate_scene(1, sc::SceneParams{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sc::build_sdf_fast(gen.scene.drivable, gen.scene.bounds, 0.2));
  }
}
BENCHMARK(BM_BuildSdfFast)->Unit(benchmark::kMillisecond);

static void BM_DrivableLoss(benchmark::State& state) {
  const auto gen = sc::generate_scene(1, sc::SceneParams{});
  const auto grid = sc::build_sdf(gen.scene, 0.2);
  const sc::Footprint fp;
  const sc::GuardedLossConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sc::drivable_loss(gen.expert, grid, fp, cfg));
}
BENCHMARK(BM_DrivableLoss);

static void BM_GenerateScene(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sc::generate_scene(seed++, sc::SceneParams{}));
}
BENCHMARK(BM_GenerateScene)->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const auto& c = bench_case();
  const dn::Tensor x = dn::normalize(c.expert).replicate(rows, 1);
  const dn::Tensor conds = c.encoded.replicate(rows, 1);
  const std::vector<int> ts(static_cast<std::size_t>(rows), 10);
  for (auto _ : state) benchmark::DoNotOptimize(dn::predict(bench_params(), x, ts, conds));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_Predict)->Arg(1)->Arg(8)->Arg(64);

static void BM_GuideX0(benchmark::State& state) {
  const auto& c = bench_case();
  df::GuidanceConfig cfg;
  cfg.guard.trigger_margin = 100.0;  // always triggers
  const sc::Footprint fp;
  for (auto _ : state) benchmark::DoNotOptimize(df::guide_x0(c.expert, c.grid, fp, cfg, 5));
}
BENCHMARK(BM_GuideX0);

static void BM_Sample(benchmark::State& state) {
  const auto& c = bench_case();
  const auto schedule = df::make_schedule(50);
  df::SampleRequest req;
  req.guidance.enabled = state.range(0) != 0;
  const df::GuidanceTarget target{&c.grid, sc::Footprint{}};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(df::sample(bench_params(), c.encoded, target, schedule, req, seed++));
  }
}
BENCHMARK(BM_Sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ChainLogProb(benchmark::State& state) {
  const auto& c = bench_case();
  const auto schedule = df::make_schedule(50);
  df::SampleRequest req;
  req.kind = df::SamplerKind::stochastic;
  req.guidance.enabled = false;
  const auto out = df::sample(bench_params(), c.encoded, {}, schedule, req, 3);
  const std::vector<double> w(50, 1.0 / 50.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gr::chain_log_prob(bench_params(), *out.chain, schedule, w));
  }
}
BENCHMARK(BM_ChainLogProb)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
