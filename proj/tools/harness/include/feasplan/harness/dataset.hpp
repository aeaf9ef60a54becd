#pragma once

#include "feasplan/denoiser/denoiser.hpp"
#include "feasplan/geometry/curvature.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace feasplan::harness {

inline constexpr double kDefaultCell = 0.2;  // m

// A generated scene with everything the planner and the metrics need.
struct SceneCase {
  scene::Scene scene;
  geometry::Trajectory expert;
  scene::SdfGrid grid;
  denoiser::Condition condition;
  diffcore::Tensor encoded;  // 1 x C
  bool narrow = false;
};

// Speed implied by the first expert step from the start pose.
double initial_speed(const geometry::Trajectory& expert, const geometry::Waypoint& start);

SceneCase make_case(scene::GeneratedScene generated, double cell = kDefaultCell,
                    bool narrow = false);

struct SuiteSpec {
  std::size_t count = 0;
  std::size_t narrow = 0;  // the last `narrow` scenes use narrow_params
  std::uint64_t seed_base = 0;
  scene::SceneParams params;
  double cell = kDefaultCell;
};

// Scene i uses seed seed_base + i. Built on `workers` threads; order is by index.
std::vector<SceneCase> build_suite(const SuiteSpec& spec, const geometry::CurvatureConfig& curvature,
                                   const scene::Footprint& fp, int workers = 1);

// Stacked encoded conditions of a set of cases.
diffcore::Tensor stack_conditions(std::span<const SceneCase> cases);

}  // namespace feasplan::harness
