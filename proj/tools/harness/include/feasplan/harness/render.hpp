#pragma once

#include "feasplan/geometry/trajectory.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"

#include <optional>
#include <string>
#include <vector>

namespace feasplan::harness {

struct Segment {
  scene::Vec2 a;
  scene::Vec2 b;
};

// Marching-squares segments of the SDF level set at `level`, in metres.
std::vector<Segment> isoline(const scene::SdfGrid& grid, double level);

struct RenderInput {
  const scene::Scene* scene = nullptr;
  const scene::SdfGrid* grid = nullptr;
  scene::Footprint footprint;
  double safety_margin = 0.3;  // m, second isoline
  std::optional<geometry::Trajectory> expert;
  std::optional<geometry::Trajectory> plan;
  int footprint_stride = 5;
};

// Self-contained SVG; output depends only on the input.
std::string render_svg(const RenderInput& in);

}  // namespace feasplan::harness
