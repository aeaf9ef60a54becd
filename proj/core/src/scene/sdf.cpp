#include "feasplan/scene/sdf.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/ops.hpp"
#include "feasplan/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace feasplan::scene {
namespace {

SdfGrid empty_grid(const Bounds& bounds, double cell) {
  if (!(cell > 0.0)) throw InvalidArgument("sdf: cell size must be positive");
  if (!(bounds.max_x > bounds.min_x && bounds.max_y > bounds.min_y)) {
    throw InvalidArgument("sdf: empty bounds");
  }
  SdfGrid g;
  g.origin = {bounds.min_x, bounds.min_y};
  g.cell = cell;
  g.width = static_cast<int>(std::ceil((bounds.max_x - bounds.min_x) / cell)) + 1;
  g.height = static_cast<int>(std::ceil((bounds.max_y - bounds.min_y) / cell)) + 1;
  g.values.assign(static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height), 0.0);
  return g;
}

// 1-D lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on
// squared distances measured in cells.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == inf) continue;
    while (k >= 0) {
      const int p = v[static_cast<std::size_t>(k)];
      const double s = ((f[static_cast<std::size_t>(q)] + q * q) -
                        (f[static_cast<std::size_t>(p)] + p * p)) /
                       (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] =
        k == 0 ? -inf
               : ((f[static_cast<std::size_t>(q)] + q * q) -
                  (f[static_cast<std::size_t>(v[static_cast<std::size_t>(k - 1)])] +
                   v[static_cast<std::size_t>(k - 1)] * v[static_cast<std::size_t>(k - 1)])) /
                     (2.0 * (q - v[static_cast<std::size_t>(k - 1)]));
    z[static_cast<std::size_t>(k + 1)] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j + 1)] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[static_cast<std::size_t>(q)] = (q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}

// Squared distance (in cells) from every cell to the nearest seed cell.
std::vector<double> squared_edt(const std::vector<char>& seeds, int width, int height) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) grid[i] = seeds[i] ? 0.0 : inf;
  const int n = std::max(width, height);
  std::vector<double> f;
  std::vector<double> d;
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  for (int iy = 0; iy < height; ++iy) {
    f.assign(static_cast<std::size_t>(width), 0.0);
    d.assign(static_cast<std::size_t>(width), 0.0);
    for (int ix = 0; ix < width; ++ix) {
      f[static_cast<std::size_t>(ix)] = grid[static_cast<std::size_t>(iy * width + ix)];
    }
    edt_1d(f, d, v, z);
    for (int ix = 0; ix < width; ++ix) {
      grid[static_cast<std::size_t>(iy * width + ix)] = d[static_cast<std::size_t>(ix)];
    }
  }
  for (int ix = 0; ix < width; ++ix) {
    f.assign(static_cast<std::size_t>(height), 0.0);
    d.assign(static_cast<std::size_t>(height), 0.0);
    for (int iy = 0; iy < height; ++iy) {
      f[static_cast<std::size_t>(iy)] = grid[static_cast<std::size_t>(iy * width + ix)];
    }
    edt_1d(f, d, v, z);
    for (int iy = 0; iy < height; ++iy) {
      grid[static_cast<std::size_t>(iy * width + ix)] = d[static_cast<std::size_t>(iy)];
    }
  }
  return grid;
}

}  // namespace

SdfGrid build_sdf(std::span<const Vec2> polygon, const Bounds& bounds, double cell) {
  validate_polygon(polygon);
  SdfGrid g = empty_grid(bounds, cell);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      g.values[static_cast<std::size_t>(iy * g.width + ix)] =
          signed_distance(polygon, g.center(ix, iy));
    }
  }
  return g;
}

SdfGrid build_sdf(const Scene& scene, double cell) {
  return build_sdf(scene.drivable, scene.bounds, cell);
}

SdfGrid build_sdf_fast(std::span<const Vec2> polygon, const Bounds& bounds, double cell) {
  validate_polygon(polygon);
  SdfGrid g = empty_grid(bounds, cell);
  std::vector<char> inside(g.values.size());
  std::vector<char> outside(g.values.size());
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      const bool in = point_in_polygon(polygon, g.center(ix, iy));
      inside[static_cast<std::size_t>(iy * g.width + ix)] = in ? 1 : 0;
      outside[static_cast<std::size_t>(iy * g.width + ix)] = in ? 0 : 1;
    }
  }
  const auto to_outside = squared_edt(outside, g.width, g.height);
  const auto to_inside = squared_edt(inside, g.width, g.height);
  // The boundary lies between a cell centre and its nearest opposite-side
  // centre; half a cell approximates the offset.
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (inside[i]) {
      g.values[i] = cell * (std::sqrt(to_outside[i]) - 0.5);
    } else {
      g.values[i] = -cell * (std::sqrt(to_inside[i]) - 0.5);
    }
  }
  return g;
}

SdfSample sample_sdf(const SdfGrid& grid, Vec2 q) {
  const double fx = (q.x - grid.origin.x) / grid.cell;
  const double fy = (q.y - grid.origin.y) / grid.cell;
  const double max_x = grid.width - 1;
  const double max_y = grid.height - 1;
  const double cx = std::clamp(fx, 0.0, max_x);
  const double cy = std::clamp(fy, 0.0, max_y);
  const int ix = std::min(static_cast<int>(std::floor(cx)), grid.width - 2);
  const int iy = std::min(static_cast<int>(std::floor(cy)), grid.height - 2);
  const double tx = cx - ix;
  const double ty = cy - iy;
  const double v00 = grid.at(ix, iy);
  const double v10 = grid.at(ix + 1, iy);
  const double v01 = grid.at(ix, iy + 1);
  const double v11 = grid.at(ix + 1, iy + 1);

  SdfSample s;
  s.value = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
  s.gradient.x = fx == cx ? ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) / grid.cell : 0.0;
  s.gradient.y = fy == cy ? ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) / grid.cell : 0.0;

  const double ox = (fx - cx) * grid.cell;
  const double oy = (fy - cy) * grid.cell;
  const double out = std::hypot(ox, oy);
  if (out > 0.0) {
    s.value -= out;
    s.gradient.x -= ox / out;
    s.gradient.y -= oy / out;
  }
  return s;
}

diffcore::Var sample_sdf(const SdfGrid& grid, diffcore::Var qx, diffcore::Var qy) {
  using diffcore::Tensor;
  const Tensor& xs = qx.value();
  const Tensor& ys = qy.value();
  if (xs.rows() != ys.rows() || xs.cols() != ys.cols()) {
    throw ShapeError("sample_sdf: query coordinate shapes differ");
  }
  Tensor value(xs.rows(), xs.cols());
  Tensor gx(xs.rows(), xs.cols());
  Tensor gy(xs.rows(), xs.cols());
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const SdfSample s = sample_sdf(grid, {xs(i), ys(i)});
    value(i) = s.value;
    gx(i) = s.gradient.x;
    gy(i) = s.gradient.y;
  }
  return diffcore::custom_binary(qx, qy, std::move(value), std::move(gx), std::move(gy));
}

}  // namespace feasplan::scene
