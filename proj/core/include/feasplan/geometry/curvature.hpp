#pragma once

#include "feasplan/diffcore/tape.hpp"
#include "feasplan/geometry/trajectory.hpp"

#include <span>
#include <vector>

namespace feasplan::geometry {

using diffcore::Tape;
using diffcore::Var;

struct CurvatureConfig {
  std::vector<double> kernel{0.25, 0.5, 0.25};
  double eps_len = 1e-3;     // m, minimum arc-length increment
  double eps_kappa = 1e-6;   // curvature denominator stabilizer
  double eps_v = 1e-3;       // m^2/s^2
  double kappa_geo = 0.166;  // 1/m, minimum turning radius ~6 m
  double a_lat_max = 6.0;    // m/s^2

  void validate() const;
};

// Batched planar positions on a tape: x and y are (batch x H).
struct Positions {
  Var x;
  Var y;
};

struct ArcLengths {
  Var increments;  // batch x (H-1)
  Var cumulative;  // batch x H, first column 0
};

// Loads the positions of each trajectory as constant rows.
Positions constant_positions(Tape& tape, std::span<const Trajectory> trajs);
Positions leaf_positions(Tape& tape, std::span<const Trajectory> trajs);

// Kernel convolution along the horizon with edge replication.
Positions smooth_positions(Positions p, const CurvatureConfig& cfg);
ArcLengths arc_lengths(Positions p, double eps_len);
// Signed curvature (left turn positive) from three-point nonuniform stencils
// over cumulative arc length; one-sided at the end points.
Var curvature_profile(Positions p, const CurvatureConfig& cfg);
// |P_{i+1} - P_i| / dt, last entry repeated.
Var point_speeds(Positions raw, double dt);
Var adaptive_bound(Var speeds, const CurvatureConfig& cfg);
// Mean over all entries of max(|kappa| - bound, 0)^2 with kappa from smoothed
// positions and speeds from raw positions.
Var curvature_loss(Positions raw, double dt, const CurvatureConfig& cfg);
// Per-point |kappa| - bound (smoothed kappa, raw speeds).
Var curvature_excess(Positions raw, double dt, const CurvatureConfig& cfg);

// Value-level conveniences on a single trajectory.
double adaptive_bound(double speed, const CurvatureConfig& cfg);
std::vector<double> point_speeds(const Trajectory& traj);
std::vector<double> curvature_profile(const Trajectory& traj, const CurvatureConfig& cfg,
                                      bool smooth = true);
std::vector<double> curvature_excess(const Trajectory& traj, const CurvatureConfig& cfg);
double curvature_loss(const Trajectory& traj, const CurvatureConfig& cfg);
double max_curvature_excess(const Trajectory& traj, const CurvatureConfig& cfg);
bool curvature_violation(const Trajectory& traj, const CurvatureConfig& cfg);
double violation_rate(std::span<const Trajectory> trajs, const CurvatureConfig& cfg);

// Violations binned by per-point speed (below / at-or-above split_speed).
struct SpeedBandViolation {
  bool low = false;
  bool high = false;
  bool has_low = false;
  bool has_high = false;
};
SpeedBandViolation band_violation(const Trajectory& traj, const CurvatureConfig& cfg,
                                  double split_speed = 2.0);

}  // namespace feasplan::geometry
