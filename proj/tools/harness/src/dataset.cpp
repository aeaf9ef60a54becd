#include "feasplan/harness/dataset.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/harness/workers.hpp"

#include <cmath>

namespace feasplan::harness {

double initial_speed(const geometry::Trajectory& expert, const geometry::Waypoint& start) {
  geometry::validate(expert, 1);
  const auto& p = expert.points.front();
  return std::hypot(p.x - start.x, p.y - start.y) / expert.dt;
}

SceneCase make_case(scene::GeneratedScene generated, double cell, bool narrow) {
  SceneCase c;
  c.scene = std::move(generated.scene);
  c.expert = std::move(generated.expert);
  c.grid = scene::build_sdf(c.scene, cell);
  c.condition = denoiser::make_condition(c.grid, initial_speed(c.expert, c.scene.start_pose),
                                         c.scene.goal);
  c.encoded = denoiser::encode_condition(c.condition);
  c.narrow = narrow;
  return c;
}

std::vector<SceneCase> build_suite(const SuiteSpec& spec, const geometry::CurvatureConfig& curvature,
                                   const scene::Footprint& fp, int workers) {
  if (spec.narrow > spec.count) throw InvalidArgument("suite: narrow count exceeds suite size");
  const scene::SceneParams narrow = scene::narrow_params(spec.params);
  std::vector<SceneCase> out(spec.count);
  parallel_for(spec.count, workers, [&](std::size_t i) {
    const bool is_narrow = i >= spec.count - spec.narrow;
    out[i] = make_case(scene::generate_scene(spec.seed_base + i, is_narrow ? narrow : spec.params,
                                             curvature, fp),
                       spec.cell, is_narrow);
  });
  return out;
}

diffcore::Tensor stack_conditions(std::span<const SceneCase> cases) {
  if (cases.empty()) throw InvalidArgument("stack_conditions: no cases");
  diffcore::Tensor out(static_cast<Eigen::Index>(cases.size()), cases.front().encoded.cols());
  for (std::size_t i = 0; i < cases.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = cases[i].encoded;
  return out;
}

}  // namespace feasplan::harness
