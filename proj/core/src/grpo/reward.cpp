#include "feasplan/common/error.hpp"
#include "feasplan/grpo/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace feasplan::grpo {

void RewardConfig::validate() const {
  if (!(lambda_fea >= 0.0)) throw InvalidArgument("reward: lambda_fea must be >= 0");
  if (!(a_long_max > 0.0)) throw InvalidArgument("reward: a_long_max must be > 0");
  if (!(progress_weight > 0.0)) throw InvalidArgument("reward: progress_weight must be > 0");
}

double progress_ratio(const geometry::Trajectory& traj, const scene::Scene& scene) {
  if (traj.points.empty()) return 0.0;
  const double s0 = scene::project_onto_centerline(scene, {scene.start_pose.x, scene.start_pose.y});
  const double sg = scene::project_onto_centerline(scene, scene.goal);
  const auto& end = traj.points.back();
  const double se = scene::project_onto_centerline(scene, {end.x, end.y});
  if (!(sg > s0)) throw InvalidArgument("progress_ratio: goal does not lie ahead of the start");
  return std::clamp((se - s0) / (sg - s0), 0.0, 1.0);
}

double max_longitudinal_accel(const geometry::Trajectory& traj, const scene::Scene& scene) {
  geometry::validate(traj, 1);
  std::vector<double> v;
  double px = scene.start_pose.x;
  double py = scene.start_pose.y;
  for (const auto& p : traj.points) {
    v.push_back(std::hypot(p.x - px, p.y - py) / traj.dt);
    px = p.x;
    py = p.y;
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - v[i - 1]) / traj.dt);
  return worst;
}

double task_reward(const geometry::Trajectory& traj, const scene::Scene& scene,
                   const scene::SdfGrid& grid, const scene::Footprint& fp,
                   const RewardConfig& rcfg) {
  if (!(scene::min_footprint_sdf(traj, grid, fp) >= 0.0)) return 0.0;
  if (!(max_longitudinal_accel(traj, scene) <= rcfg.a_long_max)) return 0.0;
  return std::pow(progress_ratio(traj, scene), rcfg.progress_weight);
}

double feasibility_reward(const geometry::Trajectory& traj, const geometry::CurvatureConfig& cfg,
                          const RewardConfig& rcfg) {
  return geometry::curvature_violation(traj, cfg) ? rcfg.infeasible_reward : rcfg.feasible_reward;
}

double total_reward(const geometry::Trajectory& traj, const scene::Scene& scene,
                    const scene::SdfGrid& grid, const scene::Footprint& fp,
                    const geometry::CurvatureConfig& curvature, const RewardConfig& rcfg) {
  const double task = task_reward(traj, scene, grid, fp, rcfg);
  if (rcfg.lambda_fea == 0.0) return task;
  return task + rcfg.lambda_fea * feasibility_reward(traj, curvature, rcfg);
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps_r) {
  if (rewards.size() < 2) throw InvalidArgument("group_advantages: need at least 2 rewards");
  if (!(eps_r > 0.0)) throw InvalidArgument("group_advantages: eps_r must be > 0");
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
    return out;
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sd + eps_r);
  return out;
}

}  // namespace feasplan::grpo
