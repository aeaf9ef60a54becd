#pragma once

#include "feasplan/diffcore/tape.hpp"
#include "feasplan/geometry/trajectory.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"

#include <array>
#include <span>

namespace feasplan::scene {

struct GuardedLossConfig {
  double m_safe = 0.3;          // m
  double trigger_margin = 0.0;  // m; corner SDF below this counts as out of bounds
};

// Front-left, front-right, rear-right, rear-left.
std::array<Vec2, 4> footprint_corners(const geometry::Waypoint& pose, const Footprint& fp);
// Vehicle-frame corner offsets in the same order.
std::array<Vec2, 4> footprint_offsets(const Footprint& fp);

// Corner SDF values d_{i,j} as a (batch x 4H) tensor, columns grouped by
// corner: [corner0 of all waypoints | corner1 ... ]. x, y, theta are
// (batch x H) in metric scene coordinates.
diffcore::Var corner_distances(const SdfGrid& grid, const Footprint& fp, diffcore::Var x,
                               diffcore::Var y, diffcore::Var theta);

// Mean over waypoints and corners of softplus(m_safe - d).
diffcore::Var drivable_loss(const SdfGrid& grid, const Footprint& fp,
                            const GuardedLossConfig& cfg, diffcore::Var x, diffcore::Var y,
                            diffcore::Var theta);
double drivable_loss(const geometry::Trajectory& traj, const SdfGrid& grid, const Footprint& fp,
                     const GuardedLossConfig& cfg);

double min_footprint_sdf(const geometry::Trajectory& traj, const SdfGrid& grid,
                         const Footprint& fp);
bool drivable_violation(const geometry::Trajectory& traj, const SdfGrid& grid,
                        const Footprint& fp);

struct PlannedTrajectory {
  const geometry::Trajectory* trajectory = nullptr;
  const SdfGrid* grid = nullptr;
};
double drivable_violation_rate(std::span<const PlannedTrajectory> set, const Footprint& fp);

}  // namespace feasplan::scene
