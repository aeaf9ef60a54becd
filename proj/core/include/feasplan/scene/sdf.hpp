#pragma once

#include "feasplan/diffcore/tape.hpp"
#include "feasplan/scene/polygon.hpp"

#include <vector>

namespace feasplan::scene {

struct Scene;

// Rasterized signed distance field; values are stored row-major with
// value(ix, iy) at the cell centre origin + (ix, iy) * cell.
struct SdfGrid {
  Vec2 origin;
  double cell = 0.2;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  [[nodiscard]] double at(int ix, int iy) const {
    return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(ix)];
  }
  [[nodiscard]] Vec2 center(int ix, int iy) const {
    return {origin.x + ix * cell, origin.y + iy * cell};
  }
};

struct SdfSample {
  double value = 0.0;
  Vec2 gradient;
};

// Cell centres span bounds; exact per-cell polygon distance with
// crossing-number sign.
SdfGrid build_sdf(std::span<const Vec2> polygon, const Bounds& bounds, double cell);
SdfGrid build_sdf(const Scene& scene, double cell);

// Two-pass squared Euclidean distance transform over the inside/outside
// raster. Agrees with build_sdf within one cell diagonal.
SdfGrid build_sdf_fast(std::span<const Vec2> polygon, const Bounds& bounds, double cell);

// Bilinear interpolation with analytic gradient. Queries outside the grid
// clamp to the border and subtract the distance to the clamped point.
SdfSample sample_sdf(const SdfGrid& grid, Vec2 q);

// Elementwise differentiable lookup of (qx, qy) tensors of equal shape.
diffcore::Var sample_sdf(const SdfGrid& grid, diffcore::Var qx, diffcore::Var qy);

}  // namespace feasplan::scene
