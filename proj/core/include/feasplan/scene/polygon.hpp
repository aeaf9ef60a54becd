#pragma once

#include <span>
#include <vector>

namespace feasplan::scene {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool operator==(const Bounds&) const = default;
};

using Polygon = std::vector<Vec2>;

double signed_area(std::span<const Vec2> poly);
Bounds bounding_box(std::span<const Vec2> pts, double margin = 0.0);
double point_segment_distance(Vec2 q, Vec2 a, Vec2 b);
double boundary_distance(std::span<const Vec2> poly, Vec2 q);
// Crossing-number test; points exactly on an edge may land on either side.
bool point_in_polygon(std::span<const Vec2> poly, Vec2 q);
// +dist inside, -dist outside, 0 on the boundary.
double signed_distance(std::span<const Vec2> poly, Vec2 q);
// No two non-adjacent edges intersect and no edge is degenerate.
bool is_simple(std::span<const Vec2> poly);
// Throws InvalidArgument when the polygon has < 3 vertices, zero area or
// self-intersections.
void validate_polygon(std::span<const Vec2> poly);

}  // namespace feasplan::scene
