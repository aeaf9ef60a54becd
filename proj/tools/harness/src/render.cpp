#include "feasplan/harness/render.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/harness/io.hpp"
#include "feasplan/scene/footprint.hpp"

#include <array>
#include <cmath>

namespace feasplan::harness {

namespace {

constexpr double kScale = 10.0;  // px per metre

scene::Vec2 lerp_edge(scene::Vec2 p, double vp, scene::Vec2 q, double vq, double level) {
  const double t = (level - vp) / (vq - vp);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

std::string fmt(double v) {
  // Fixed precision keeps files small and stable.
  return format_number(std::round(v * 100.0) / 100.0);
}

struct Canvas {
  scene::Bounds b;
  [[nodiscard]] std::string point(scene::Vec2 p) const {
    return fmt((p.x - b.min_x) * kScale) + ',' + fmt((b.max_y - p.y) * kScale);
  }
};

std::string polyline(const Canvas& c, std::span<const scene::Vec2> pts, bool closed,
                     const std::string& style) {
  std::string out = closed ? "<polygon points=\"" : "<polyline points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += c.point(pts[i]);
  }
  out += "\" " + style + "/>\n";
  return out;
}

std::string segments(const Canvas& c, std::span<const Segment> segs, const std::string& style) {
  std::string d;
  for (const auto& s : segs) d += 'M' + c.point(s.a) + 'L' + c.point(s.b);
  if (d.empty()) return {};
  return "<path d=\"" + d + "\" " + style + "/>\n";
}

std::string trajectory(const Canvas& c, const RenderInput& in, const geometry::Trajectory& t,
                       const std::string& colour) {
  std::vector<scene::Vec2> pts{{in.scene->start_pose.x, in.scene->start_pose.y}};
  for (const auto& w : t.points) pts.push_back({w.x, w.y});
  std::string out = polyline(c, pts, false, "fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"");
  for (std::size_t i = 0; i < t.size(); i += static_cast<std::size_t>(in.footprint_stride)) {
    const auto corners = scene::footprint_corners(t.points[i], in.footprint);
    out += polyline(c, corners, true,
                    "fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1\" stroke-dasharray=\"3,2\"");
  }
  return out;
}

}  // namespace

std::vector<Segment> isoline(const scene::SdfGrid& grid, double level) {
  std::vector<Segment> out;
  for (int iy = 0; iy + 1 < grid.height; ++iy) {
    for (int ix = 0; ix + 1 < grid.width; ++ix) {
      const std::array<scene::Vec2, 4> p{grid.center(ix, iy), grid.center(ix + 1, iy),
                                         grid.center(ix + 1, iy + 1), grid.center(ix, iy + 1)};
      const std::array<double, 4> v{grid.at(ix, iy), grid.at(ix + 1, iy), grid.at(ix + 1, iy + 1),
                                    grid.at(ix, iy + 1)};
      std::vector<scene::Vec2> hits;
      for (int e = 0; e < 4; ++e) {
        const int f = (e + 1) % 4;
        if ((v[e] < level) != (v[f] < level)) hits.push_back(lerp_edge(p[e], v[e], p[f], v[f], level));
      }
      if (hits.size() == 2) {
        out.push_back({hits[0], hits[1]});
      } else if (hits.size() == 4) {
        // Saddle: resolve with the cell-centre average.
        const double mid = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((mid < level) == (v[0] < level)) {
          out.push_back({hits[0], hits[1]});
          out.push_back({hits[2], hits[3]});
        } else {
          out.push_back({hits[3], hits[0]});
          out.push_back({hits[1], hits[2]});
        }
      }
    }
  }
  return out;
}

std::string render_svg(const RenderInput& in) {
  if (!in.scene) throw InvalidArgument("render: no scene");
  if (in.footprint_stride < 1) throw InvalidArgument("render: footprint stride must be >= 1");
  const Canvas c{in.scene->bounds};
  const double w = (c.b.max_x - c.b.min_x) * kScale;
  const double h = (c.b.max_y - c.b.min_y) * kScale;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" +
                    fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + ' ' + fmt(h) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += polyline(c, in.scene->drivable, true, "fill=\"#e8e8e8\" stroke=\"#555555\" stroke-width=\"1\"");
  if (in.grid) {
    out += segments(c, isoline(*in.grid, 0.0), "fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"");
    out += segments(c, isoline(*in.grid, in.safety_margin),
                    "fill=\"none\" stroke=\"#d08000\" stroke-width=\"1\" stroke-dasharray=\"4,3\"");
  }
  out += polyline(c, in.scene->centerline, false,
                  "fill=\"none\" stroke=\"#aaaaaa\" stroke-width=\"1\" stroke-dasharray=\"1,3\"");
  if (in.expert) out += trajectory(c, in, *in.expert, "#2060c0");
  if (in.plan) out += trajectory(c, in, *in.plan, "#c02020");
  const scene::Vec2 s{in.scene->start_pose.x, in.scene->start_pose.y};
  out += "<circle cx=\"" + fmt((s.x - c.b.min_x) * kScale) + "\" cy=\"" +
         fmt((c.b.max_y - s.y) * kScale) + "\" r=\"4\" fill=\"#000000\"/>\n";
  out += "<circle cx=\"" + fmt((in.scene->goal.x - c.b.min_x) * kScale) + "\" cy=\"" +
         fmt((c.b.max_y - in.scene->goal.y) * kScale) + "\" r=\"4\" fill=\"#20a020\"/>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace feasplan::harness
