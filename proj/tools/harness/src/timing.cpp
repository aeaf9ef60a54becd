#include "feasplan/harness/timing.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffusion/sampler.hpp"
#include "feasplan/harness/io.hpp"
#include "feasplan/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>

namespace feasplan::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<TimingRow> timing_probe(const denoiser::DenoiserParams& params,
                                    std::span<const SceneCase> cases, const RunConfig& cfg) {
  const auto schedule = cfg.make_schedule();
  diffusion::SampleRequest req;
  req.kind = cfg.eval.sampler;
  req.guidance = cfg.guidance;
  req.dt = cfg.scene.dt;
  std::vector<TimingRow> rows;
  rows.reserve(cases.size());
  for (const auto& c : cases) {
    TimingRow r;
    r.scene = c.scene.seed;
    auto t0 = Clock::now();
    const auto grid = scene::build_sdf(c.scene, cfg.data.cell);
    r.sdf_seconds = seconds_since(t0);
    diffusion::SampleStats stats;
    diffusion::sample(params, c.encoded, {&grid, cfg.footprint}, schedule, req,
                      scene_sample_seed(cfg, c.scene.seed), &stats);
    r.predict_seconds = stats.predict_seconds;
    r.guidance_seconds = stats.guidance_seconds;
    r.sample_seconds = stats.total_seconds;
    r.overhead_seconds = std::max(0.0, stats.total_seconds - stats.predict_seconds - stats.guidance_seconds);
    r.guidance_calls = stats.guidance_calls;
    r.triggered_steps = stats.triggered_steps;
    rows.push_back(r);
  }
  return rows;
}

TimingSummary summarize(std::span<const TimingRow> rows) {
  TimingSummary s;
  for (const auto& r : rows) {
    ++s.scenes;
    s.sdf_seconds += r.sdf_seconds;
    s.predict_seconds += r.predict_seconds;
    s.guidance_seconds += r.guidance_seconds;
    s.overhead_seconds += r.overhead_seconds;
    s.sample_seconds += r.sample_seconds;
    s.guidance_calls += r.guidance_calls;
    s.triggered_steps += r.triggered_steps;
  }
  if (s.scenes) {
    const double n = static_cast<double>(s.scenes);
    s.sdf_seconds /= n;
    s.predict_seconds /= n;
    s.guidance_seconds /= n;
    s.overhead_seconds /= n;
    s.sample_seconds /= n;
  }
  return s;
}

std::string timing_csv(std::span<const TimingRow> rows) {
  std::string out =
      "scene,sdf_s,predict_s,guidance_s,overhead_s,sample_s,guidance_calls,triggered_steps\n";
  for (const auto& r : rows) {
    out += std::to_string(r.scene) + ',' + format_number(r.sdf_seconds) + ',' +
           format_number(r.predict_seconds) + ',' + format_number(r.guidance_seconds) + ',' +
           format_number(r.overhead_seconds) + ',' + format_number(r.sample_seconds) + ',' +
           std::to_string(r.guidance_calls) + ',' + std::to_string(r.triggered_steps) + '\n';
  }
  return out;
}

std::string timing_text(const TimingSummary& s) {
  char buf[512];
  const double share = s.sample_seconds > 0.0 ? 100.0 * s.guidance_seconds / s.sample_seconds : 0.0;
  std::snprintf(buf, sizeof(buf),
                "scenes            %zu\n"
                "sdf build         %.3f ms\n"
                "denoiser forward  %.3f ms\n"
                "guidance          %.3f ms (%.2f%% of sampling)\n"
                "sampler overhead  %.3f ms\n"
                "sampling total    %.3f ms\n"
                "guidance calls    %ld\n"
                "triggered steps   %ld\n",
                s.scenes, 1e3 * s.sdf_seconds, 1e3 * s.predict_seconds, 1e3 * s.guidance_seconds,
                share, 1e3 * s.overhead_seconds, 1e3 * s.sample_seconds, s.guidance_calls,
                s.triggered_steps);
  return buf;
}

std::vector<SdfScalingRow> sdf_scaling(const scene::Scene& scene, std::span<const double> cells,
                                       int repeats) {
  if (repeats < 1) throw InvalidArgument("sdf_scaling: repeats must be >= 1");
  std::vector<SdfScalingRow> out;
  for (double cell : cells) {
    SdfScalingRow r;
    r.cell = cell;
    r.seconds = std::numeric_limits<double>::infinity();
    for (int k = 0; k < repeats; ++k) {
      const auto t0 = Clock::now();
      const auto grid = scene::build_sdf(scene, cell);
      r.seconds = std::min(r.seconds, seconds_since(t0));
      r.cells = static_cast<long>(grid.width) * grid.height;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace feasplan::harness
