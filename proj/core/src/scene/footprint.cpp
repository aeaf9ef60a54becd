#include "feasplan/scene/footprint.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace feasplan::scene {

namespace dc = diffcore;

std::array<Vec2, 4> footprint_offsets(const Footprint& fp) {
  const double front = 0.5 * fp.length + fp.center_offset;
  const double rear = -0.5 * fp.length + fp.center_offset;
  const double half_w = 0.5 * fp.width;
  return {Vec2{front, half_w}, Vec2{front, -half_w}, Vec2{rear, -half_w}, Vec2{rear, half_w}};
}

std::array<Vec2, 4> footprint_corners(const geometry::Waypoint& pose, const Footprint& fp) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  std::array<Vec2, 4> out;
  const auto offsets = footprint_offsets(fp);
  for (std::size_t j = 0; j < 4; ++j) {
    out[j] = {pose.x + c * offsets[j].x - s * offsets[j].y,
              pose.y + s * offsets[j].x + c * offsets[j].y};
  }
  return out;
}

dc::Var corner_distances(const SdfGrid& grid, const Footprint& fp, dc::Var x, dc::Var y,
                         dc::Var theta) {
  dc::Var c = dc::cos(theta);
  dc::Var s = dc::sin(theta);
  std::array<dc::Var, 4> parts;
  const auto offsets = footprint_offsets(fp);
  for (std::size_t j = 0; j < 4; ++j) {
    const double ox = offsets[j].x;
    const double oy = offsets[j].y;
    dc::Var px = dc::add(x, dc::sub(dc::scale(c, ox), dc::scale(s, oy)));
    dc::Var py = dc::add(y, dc::add(dc::scale(s, ox), dc::scale(c, oy)));
    parts[j] = sample_sdf(grid, px, py);
  }
  return dc::concat_cols(parts);
}

dc::Var drivable_loss(const SdfGrid& grid, const Footprint& fp, const GuardedLossConfig& cfg,
                      dc::Var x, dc::Var y, dc::Var theta) {
  dc::Var d = corner_distances(grid, fp, x, y, theta);
  return dc::mean(dc::softplus(dc::shift(dc::neg(d), cfg.m_safe)));
}

namespace {

std::array<dc::Var, 3> pose_constants(dc::Tape& tape, const geometry::Trajectory& traj) {
  const auto h = static_cast<Eigen::Index>(traj.size());
  dc::Tensor x(1, h);
  dc::Tensor y(1, h);
  dc::Tensor t(1, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    const auto& p = traj.points[static_cast<std::size_t>(i)];
    x(0, i) = p.x;
    y(0, i) = p.y;
    t(0, i) = p.theta;
  }
  return {tape.constant(std::move(x)), tape.constant(std::move(y)), tape.constant(std::move(t))};
}

}  // namespace

double drivable_loss(const geometry::Trajectory& traj, const SdfGrid& grid, const Footprint& fp,
                     const GuardedLossConfig& cfg) {
  geometry::validate(traj, 1);
  dc::Tape tape;
  auto [x, y, t] = pose_constants(tape, traj);
  return drivable_loss(grid, fp, cfg, x, y, t).scalar();
}

double min_footprint_sdf(const geometry::Trajectory& traj, const SdfGrid& grid,
                         const Footprint& fp) {
  geometry::validate(traj, 1);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : traj.points) {
    for (const Vec2& c : footprint_corners(p, fp)) best = std::min(best, sample_sdf(grid, c).value);
  }
  return best;
}

bool drivable_violation(const geometry::Trajectory& traj, const SdfGrid& grid,
                        const Footprint& fp) {
  return min_footprint_sdf(traj, grid, fp) < 0.0;
}

double drivable_violation_rate(std::span<const PlannedTrajectory> set, const Footprint& fp) {
  if (set.empty()) throw InvalidArgument("drivable_violation_rate: empty set");
  std::size_t count = 0;
  for (const auto& item : set) count += drivable_violation(*item.trajectory, *item.grid, fp) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(set.size());
}

}  // namespace feasplan::scene
