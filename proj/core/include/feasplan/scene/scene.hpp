#pragma once

#include "feasplan/geometry/curvature.hpp"
#include "feasplan/geometry/trajectory.hpp"
#include "feasplan/scene/polygon.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace feasplan::scene {

// Corridor generator parameters. Angles in radians, lengths in meters.
struct SceneParams {
  int min_segments = 2;
  int max_segments = 5;
  int min_turns = 0;
  double min_width = 3.0;
  double max_width = 8.0;
  double min_turn_radius = 8.0;
  double max_turn_radius = 40.0;
  double min_turn_angle = 0.35;
  double max_turn_angle = 1.2;
  double max_heading = 1.75;  // |cumulative heading| limit keeps corridors from folding
  double min_straight = 3.0;
  double max_straight = 15.0;
  double min_speed = 1.0;
  double max_speed = 10.0;
  // Fraction of the lateral-acceleration limit the expert may use in turns.
  double lateral_usage = 0.7;
  double jitter_fraction = 0.08;  // of the corridor half-width
  double lead_in = 8.0;           // corridor behind the start pose
  double tail = 12.0;             // corridor beyond the expert's final waypoint
  double margin = 5.0;            // bounds margin around the polygon
  double min_clearance = 0.1;     // expert footprint clearance, exact SDF
  std::size_t horizon = 8;
  double dt = 0.5;

  bool operator==(const SceneParams&) const = default;
};

// Parameters of the narrow-corridor evaluation subset.
SceneParams narrow_params(SceneParams base = {});

struct Scene {
  std::uint64_t seed = 0;
  SceneParams params;
  Polygon drivable;          // counterclockwise
  std::vector<Vec2> centerline;
  Vec2 goal;
  geometry::Waypoint start_pose;
  Bounds bounds;

  bool operator==(const Scene&) const = default;
};

struct Footprint {
  double length = 4.6;
  double width = 1.9;
  double center_offset = 0.0;
};

struct GeneratedScene {
  Scene scene;
  geometry::Trajectory expert;
};

void validate(const SceneParams& params, const geometry::CurvatureConfig& curvature,
              const Footprint& footprint);

// Deterministic in (seed, params). The expert satisfies the adaptive
// curvature bound and keeps every footprint corner inside the corridor.
GeneratedScene generate_scene(std::uint64_t seed, const SceneParams& params,
                              const geometry::CurvatureConfig& curvature = {},
                              const Footprint& footprint = {});

// Arc length of the projection of q onto the centerline polyline.
double project_onto_centerline(const Scene& scene, Vec2 q);

// Structured text; round-trips exactly.
void write_scene(std::ostream& os, const Scene& scene);
Scene read_scene(std::istream& is);
void save_scene(const std::string& path, const Scene& scene);
Scene load_scene(const std::string& path);

}  // namespace feasplan::scene
