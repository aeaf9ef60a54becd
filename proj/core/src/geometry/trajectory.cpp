#include "feasplan/geometry/trajectory.hpp"

#include "feasplan/common/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace feasplan::geometry {

double normalize_angle(double theta) {
  double a = std::remainder(theta, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void validate(const Trajectory& traj, std::size_t min_points) {
  if (!(traj.dt > 0.0) || !std::isfinite(traj.dt)) {
    throw InvalidArgument("trajectory: dt must be positive and finite");
  }
  if (traj.size() < min_points) {
    throw InvalidArgument("trajectory: need at least " + std::to_string(min_points) +
                          " waypoints, got " + std::to_string(traj.size()));
  }
  for (const Waypoint& p : traj.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.theta)) {
      throw InvalidArgument("trajectory: non-finite waypoint");
    }
  }
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  os << traj.size() << ' ' << fmt17(traj.dt) << '\n';
  for (const Waypoint& p : traj.points) {
    os << fmt17(p.x) << ' ' << fmt17(p.y) << ' ' << fmt17(p.theta) << '\n';
  }
}

Trajectory read_trajectory(std::istream& is) {
  Trajectory traj;
  std::size_t n = 0;
  if (!(is >> n >> traj.dt)) throw FormatError("trajectory: missing 'H dt' header");
  traj.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Waypoint& p = traj.points[i];
    if (!(is >> p.x >> p.y >> p.theta)) {
      throw FormatError("trajectory: truncated at waypoint " + std::to_string(i));
    }
  }
  validate(traj);
  return traj;
}

void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_trajectory(os, traj);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_trajectory(is);
}

}  // namespace feasplan::geometry
