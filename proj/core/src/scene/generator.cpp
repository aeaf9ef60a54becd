#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/scene/footprint.hpp"
#include "feasplan/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace feasplan::scene {
namespace {

struct Segment {
  Vec2 start;
  double heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;

  [[nodiscard]] Vec2 point_at(double s) const {
    if (curvature == 0.0) {
      return {start.x + s * std::cos(heading), start.y + s * std::sin(heading)};
    }
    const double h = heading + curvature * s;
    return {start.x + (std::sin(h) - std::sin(heading)) / curvature,
            start.y + (std::cos(heading) - std::cos(h)) / curvature};
  }
  [[nodiscard]] double heading_at(double s) const { return heading + curvature * s; }
};

class Centerline {
 public:
  void append(double length, double curvature) {
    Segment seg;
    if (segments_.empty()) {
      seg.start = start_;
      seg.heading = 0.0;
    } else {
      const Segment& last = segments_.back();
      seg.start = last.point_at(last.length);
      seg.heading = last.heading_at(last.length);
    }
    seg.length = length;
    seg.curvature = curvature;
    segments_.push_back(seg);
    total_ += length;
  }

  void set_start(Vec2 p) { start_ = p; }

  // Shortens the path to total length `length`.
  void truncate(double length) {
    double acc = 0.0;
    std::vector<Segment> kept;
    for (Segment seg : segments_) {
      if (acc >= length) break;
      seg.length = std::min(seg.length, length - acc);
      acc += seg.length;
      kept.push_back(seg);
    }
    segments_ = std::move(kept);
    total_ = acc;
  }

  [[nodiscard]] double total() const { return total_; }
  [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }

  [[nodiscard]] std::pair<Vec2, double> pose_at(double s) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const Segment& seg = segments_[i];
      if (s <= acc + seg.length || i + 1 == segments_.size()) {
        const double local = std::clamp(s - acc, 0.0, seg.length);
        return {seg.point_at(local), seg.heading_at(local)};
      }
      acc += seg.length;
    }
    return {start_, 0.0};
  }

  // Polyline with arcs subdivided to chords of at most max_chord.
  [[nodiscard]] std::vector<std::pair<Vec2, double>> discretize(double max_chord) const {
    std::vector<std::pair<Vec2, double>> out;
    out.emplace_back(segments_.front().start, segments_.front().heading);
    for (const Segment& seg : segments_) {
      const int pieces = seg.curvature == 0.0
                             ? 1
                             : std::max(1, static_cast<int>(std::ceil(seg.length / max_chord)));
      for (int k = 1; k <= pieces; ++k) {
        const double s = seg.length * k / pieces;
        out.emplace_back(seg.point_at(s), seg.heading_at(s));
      }
    }
    return out;
  }

 private:
  Vec2 start_;
  std::vector<Segment> segments_;
  double total_ = 0.0;
};

struct Attempt {
  GeneratedScene result;
  bool ok = false;
};

Attempt attempt_scene(std::uint64_t seed, std::uint64_t attempt, const SceneParams& p,
                      const geometry::CurvatureConfig& curvature, const Footprint& fp) {
  std::mt19937_64 rng(mix_seed(seed, attempt));
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto coin = [&rng]() { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };

  const double width = uniform(p.min_width, p.max_width);
  int n_segments = std::uniform_int_distribution<int>(p.min_segments, p.max_segments)(rng);
  const bool arc_first = coin();

  std::vector<bool> is_arc;
  int arcs = 0;
  for (int k = 0; k < n_segments; ++k) {
    const bool arc = ((k % 2) == 1) != arc_first;
    is_arc.push_back(arc);
    arcs += arc ? 1 : 0;
  }
  while (arcs < p.min_turns) {
    if (!is_arc.empty() && !is_arc.back()) {
      is_arc.push_back(true);
    } else {
      is_arc.push_back(false);
      is_arc.push_back(true);
    }
    ++arcs;
  }

  Centerline line;
  line.set_start({-p.lead_in, 0.0});
  line.append(p.lead_in, 0.0);
  double heading = 0.0;
  double kappa_max = 0.0;
  for (bool arc : is_arc) {
    if (!arc) {
      line.append(uniform(p.min_straight, p.max_straight), 0.0);
      continue;
    }
    const double radius = uniform(p.min_turn_radius, p.max_turn_radius);
    double angle = uniform(p.min_turn_angle, p.max_turn_angle);
    double sign = coin() ? 1.0 : -1.0;
    if (std::abs(heading + sign * angle) > p.max_heading) sign = -sign;
    if (std::abs(heading + sign * angle) > p.max_heading) {
      angle = p.max_heading - std::abs(heading);
    }
    heading += sign * angle;
    line.append(angle * radius, sign / radius);
  }

  // Constant expert speed, limited by the tightest turn that can be reached.
  for (const Segment& seg : line.segments()) kappa_max = std::max(kappa_max, std::abs(seg.curvature));
  double v_hi = p.max_speed;
  if (kappa_max > 0.0) {
    v_hi = std::min(v_hi, std::sqrt(p.lateral_usage * curvature.a_lat_max / kappa_max));
  }
  if (v_hi < p.min_speed) return {};
  const double speed = uniform(p.min_speed, v_hi);
  const auto horizon = static_cast<double>(p.horizon);
  const double travel = speed * p.dt * horizon;
  const double needed = p.lead_in + travel + p.tail;
  if (line.total() < needed) {
    line.append(needed - line.total(), 0.0);
  } else {
    line.truncate(needed);
  }

  // Turns must survive truncation.
  int turns = 0;
  for (const Segment& seg : line.segments()) {
    if (seg.curvature != 0.0 && std::abs(seg.curvature * seg.length) >= 0.5 * p.min_turn_angle) {
      ++turns;
    }
  }
  if (turns < p.min_turns) return {};

  // Smooth lateral offset vanishing at both ends of the expert path; its
  // curvature contribution is capped at 0.02 1/m.
  double amp = uniform(-1.0, 1.0) * p.jitter_fraction * 0.5 * width;
  const double amp_cap = 0.02 * travel * travel / (std::numbers::pi * std::numbers::pi);
  amp = std::clamp(amp, -amp_cap, amp_cap);

  Attempt out;
  GeneratedScene& g = out.result;
  g.scene.seed = seed;
  g.scene.params = p;
  g.scene.start_pose = {0.0, 0.0, 0.0};
  g.expert.dt = p.dt;
  for (std::size_t i = 1; i <= p.horizon; ++i) {
    const double along = speed * p.dt * static_cast<double>(i);
    const auto [c, h] = line.pose_at(p.lead_in + along);
    const double phase = std::numbers::pi * along / travel;
    const double offset = amp * std::sin(phase);
    const double slope = amp * std::numbers::pi / travel * std::cos(phase);
    g.expert.points.push_back({c.x - std::sin(h) * offset, c.y + std::cos(h) * offset,
                               geometry::normalize_angle(h + std::atan(slope))});
  }
  g.scene.goal = line.pose_at(p.lead_in + travel).first;

  const auto poly_line = line.discretize(1.0);
  std::vector<Vec2> left;
  std::vector<Vec2> right;
  for (const auto& [c, h] : poly_line) {
    g.scene.centerline.push_back(c);
    const double nx = -std::sin(h);
    const double ny = std::cos(h);
    left.push_back({c.x + nx * 0.5 * width, c.y + ny * 0.5 * width});
    right.push_back({c.x - nx * 0.5 * width, c.y - ny * 0.5 * width});
  }
  g.scene.drivable = right;
  g.scene.drivable.insert(g.scene.drivable.end(), left.rbegin(), left.rend());
  // The raw centerline ends on the corridor's end caps; pull both ends inside.
  auto inset = [](Vec2& end, Vec2 next) {
    const double d = std::hypot(next.x - end.x, next.y - end.y);
    const double t = std::min(0.5, 0.5 * d) / d;
    end = {end.x + t * (next.x - end.x), end.y + t * (next.y - end.y)};
  };
  auto& cl = g.scene.centerline;
  inset(cl.front(), cl[1]);
  inset(cl.back(), cl[cl.size() - 2]);
  if (!is_simple(g.scene.drivable) || signed_area(g.scene.drivable) <= 0.0) return {};
  g.scene.bounds = bounding_box(g.scene.drivable, p.margin);

  if (geometry::curvature_violation(g.expert, curvature)) return {};
  for (const geometry::Waypoint& w : g.expert.points) {
    for (const Vec2& corner : footprint_corners(w, fp)) {
      if (signed_distance(g.scene.drivable, corner) < p.min_clearance) return {};
    }
  }
  out.ok = true;
  return out;
}

}  // namespace

SceneParams narrow_params(SceneParams base) {
  base.min_width = 3.0;
  base.max_width = 4.0;
  base.min_turns = 2;
  base.min_segments = 3;
  base.max_straight = 6.0;
  base.max_turn_radius = 20.0;
  return base;
}

void validate(const SceneParams& p, const geometry::CurvatureConfig& curvature,
              const Footprint& fp) {
  auto fail = [](const std::string& what) { throw InvalidArgument("scene params: " + what); };
  if (p.min_segments < 0 || p.max_segments < p.min_segments) fail("segment count range");
  if (p.min_turns < 0) fail("min_turns must be nonnegative");
  if (!(p.min_width > 0.0) || p.max_width < p.min_width) fail("width range");
  if (p.min_width <= fp.width + 2.0 * p.min_clearance) fail("corridor narrower than footprint");
  if (p.min_turn_radius < 1.0 / curvature.kappa_geo) {
    fail("min_turn_radius below the geometric turning limit");
  }
  if (p.max_turn_radius < p.min_turn_radius) fail("turn radius range");
  if (p.min_turn_radius <= 0.5 * p.max_width) fail("turn radius must exceed corridor half-width");
  if (!(p.min_turn_angle > 0.0) || p.max_turn_angle < p.min_turn_angle) fail("turn angle range");
  if (!(p.max_heading > 0.0)) fail("max_heading must be positive");
  if (!(p.min_straight > 0.0) || p.max_straight < p.min_straight) fail("straight length range");
  if (!(p.min_speed > 0.0) || p.max_speed < p.min_speed) fail("speed range");
  if (!(p.lateral_usage > 0.0 && p.lateral_usage <= 1.0)) fail("lateral_usage in (0, 1]");
  if (p.jitter_fraction < 0.0 || p.jitter_fraction >= 0.1) fail("jitter_fraction in [0, 0.1)");
  if (p.horizon < 5) fail("horizon must be at least 5");
  if (!(p.dt > 0.0)) fail("dt must be positive");
  if (!(p.lead_in >= 0.5 * fp.length + p.min_clearance)) fail("lead_in shorter than footprint");
  if (!(p.tail > 0.0 && p.margin > 0.0)) fail("tail and margin must be positive");
  // The slowest expert must still reach the tightest allowed turn speed.
  const double v_turn =
      std::sqrt(p.lateral_usage * curvature.a_lat_max * p.min_turn_radius);
  if (v_turn < p.min_speed && p.min_turns > 0) fail("min_speed exceeds the tightest turn speed");
}

GeneratedScene generate_scene(std::uint64_t seed, const SceneParams& params,
                              const geometry::CurvatureConfig& curvature,
                              const Footprint& footprint) {
  validate(params, curvature, footprint);
  curvature.validate();
  constexpr std::uint64_t max_attempts = 256;
  for (std::uint64_t a = 0; a < max_attempts; ++a) {
    Attempt att = attempt_scene(seed, a, params, curvature, footprint);
    if (att.ok) return std::move(att.result);
  }
  throw InvalidArgument("scene params: no feasible scene after " + std::to_string(max_attempts) +
                        " attempts (seed " + std::to_string(seed) + ")");
}

double project_onto_centerline(const Scene& scene, Vec2 q) {
  const auto& c = scene.centerline;
  if (c.size() < 2) throw InvalidArgument("centerline: need at least 2 points");
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double ex = c[i + 1].x - c[i].x;
    const double ey = c[i + 1].y - c[i].y;
    const double len = std::hypot(ex, ey);
    double t = 0.0;
    if (len > 0.0) t = std::clamp(((q.x - c[i].x) * ex + (q.y - c[i].y) * ey) / (len * len), 0.0, 1.0);
    const double d = std::hypot(q.x - (c[i].x + t * ex), q.y - (c[i].y + t * ey));
    if (d < best) {
      best = d;
      best_s = acc + t * len;
    }
    acc += len;
  }
  return best_s;
}

}  // namespace feasplan::scene
