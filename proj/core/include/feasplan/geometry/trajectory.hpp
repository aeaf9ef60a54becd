#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace feasplan::geometry {

// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

struct Waypoint {
  double x = 0.0;      // m
  double y = 0.0;      // m
  double theta = 0.0;  // rad, (-pi, pi]

  bool operator==(const Waypoint&) const = default;
};

struct Trajectory {
  std::vector<Waypoint> points;
  double dt = 0.5;  // s per step

  [[nodiscard]] std::size_t size() const { return points.size(); }
  bool operator==(const Trajectory&) const = default;
};

// Throws InvalidArgument unless all values are finite, dt > 0 and
// size >= min_points.
void validate(const Trajectory& traj, std::size_t min_points = 1);

// Text format: header "H dt", then one "x y theta" line per waypoint.
void write_trajectory(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory(std::istream& is);
void save_trajectory(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory(const std::string& path);

}  // namespace feasplan::geometry
