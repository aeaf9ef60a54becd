#pragma once

#include "feasplan/harness/config.hpp"
#include "feasplan/harness/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace feasplan::harness {

// Wall-clock seconds per stage for one scene. overhead is total sampling time
// minus denoiser forward and guidance time.
struct TimingRow {
  std::uint64_t scene = 0;
  double sdf_seconds = 0.0;
  double predict_seconds = 0.0;
  double guidance_seconds = 0.0;
  double overhead_seconds = 0.0;
  double sample_seconds = 0.0;
  int guidance_calls = 0;
  int triggered_steps = 0;
};

struct TimingSummary {
  std::size_t scenes = 0;
  double sdf_seconds = 0.0;  // means per scene
  double predict_seconds = 0.0;
  double guidance_seconds = 0.0;
  double overhead_seconds = 0.0;
  double sample_seconds = 0.0;
  long guidance_calls = 0;  // totals
  long triggered_steps = 0;
};

// Single-threaded so stage times are not perturbed by other workers.
std::vector<TimingRow> timing_probe(const denoiser::DenoiserParams& params,
                                    std::span<const SceneCase> cases, const RunConfig& cfg);
TimingSummary summarize(std::span<const TimingRow> rows);
std::string timing_csv(std::span<const TimingRow> rows);
std::string timing_text(const TimingSummary& s);

struct SdfScalingRow {
  double cell = 0.0;
  long cells = 0;
  double seconds = 0.0;  // best of `repeats`
};
std::vector<SdfScalingRow> sdf_scaling(const scene::Scene& scene, std::span<const double> cells,
                                       int repeats = 3);

}  // namespace feasplan::harness
