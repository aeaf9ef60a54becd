#include "feasplan/common/error.hpp"
#include "feasplan/scene/scene.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace feasplan::scene {
namespace {

constexpr const char* kMagic = "feasplan_scene";
constexpr int kVersion = 1;

std::string f17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename Fn>
void for_each_param(SceneParams& p, Fn&& fn) {
  fn("min_segments", p.min_segments);
  fn("max_segments", p.max_segments);
  fn("min_turns", p.min_turns);
  fn("min_width", p.min_width);
  fn("max_width", p.max_width);
  fn("min_turn_radius", p.min_turn_radius);
  fn("max_turn_radius", p.max_turn_radius);
  fn("min_turn_angle", p.min_turn_angle);
  fn("max_turn_angle", p.max_turn_angle);
  fn("max_heading", p.max_heading);
  fn("min_straight", p.min_straight);
  fn("max_straight", p.max_straight);
  fn("min_speed", p.min_speed);
  fn("max_speed", p.max_speed);
  fn("lateral_usage", p.lateral_usage);
  fn("jitter_fraction", p.jitter_fraction);
  fn("lead_in", p.lead_in);
  fn("tail", p.tail);
  fn("margin", p.margin);
  fn("min_clearance", p.min_clearance);
  fn("horizon", p.horizon);
  fn("dt", p.dt);
}

template <typename T>
std::string to_text(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return f17(v);
  } else {
    return std::to_string(v);
  }
}

void expect(std::istream& is, const std::string& key) {
  std::string got;
  if (!(is >> got) || got != key) {
    throw FormatError("scene: expected '" + key + "', got '" + got + "'");
  }
}

void read_points(std::istream& is, const std::string& key, std::vector<Vec2>& out) {
  expect(is, key);
  std::size_t n = 0;
  if (!(is >> n)) throw FormatError("scene: missing " + key + " count");
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> out[i].x >> out[i].y)) throw FormatError("scene: truncated " + key);
  }
}

}  // namespace

void write_scene(std::ostream& os, const Scene& scene) {
  os << kMagic << ' ' << kVersion << '\n';
  os << "seed " << scene.seed << '\n';
  SceneParams p = scene.params;
  for_each_param(p, [&os](const char* name, auto& v) {
    os << "param." << name << ' ' << to_text(v) << '\n';
  });
  os << "start " << f17(scene.start_pose.x) << ' ' << f17(scene.start_pose.y) << ' '
     << f17(scene.start_pose.theta) << '\n';
  os << "goal " << f17(scene.goal.x) << ' ' << f17(scene.goal.y) << '\n';
  os << "bounds " << f17(scene.bounds.min_x) << ' ' << f17(scene.bounds.min_y) << ' '
     << f17(scene.bounds.max_x) << ' ' << f17(scene.bounds.max_y) << '\n';
  os << "polygon " << scene.drivable.size() << '\n';
  for (const Vec2& v : scene.drivable) os << f17(v.x) << ' ' << f17(v.y) << '\n';
  os << "centerline " << scene.centerline.size() << '\n';
  for (const Vec2& v : scene.centerline) os << f17(v.x) << ' ' << f17(v.y) << '\n';
}

Scene read_scene(std::istream& is) {
  Scene s;
  expect(is, kMagic);
  int version = 0;
  if (!(is >> version) || version != kVersion) {
    throw FormatError("scene: unsupported format version " + std::to_string(version));
  }
  expect(is, "seed");
  if (!(is >> s.seed)) throw FormatError("scene: bad seed");
  for_each_param(s.params, [&is](const char* name, auto& v) {
    expect(is, std::string("param.") + name);
    if (!(is >> v)) throw FormatError(std::string("scene: bad value for param.") + name);
  });
  expect(is, "start");
  if (!(is >> s.start_pose.x >> s.start_pose.y >> s.start_pose.theta)) {
    throw FormatError("scene: bad start pose");
  }
  expect(is, "goal");
  if (!(is >> s.goal.x >> s.goal.y)) throw FormatError("scene: bad goal");
  expect(is, "bounds");
  if (!(is >> s.bounds.min_x >> s.bounds.min_y >> s.bounds.max_x >> s.bounds.max_y)) {
    throw FormatError("scene: bad bounds");
  }
  read_points(is, "polygon", s.drivable);
  read_points(is, "centerline", s.centerline);
  validate_polygon(s.drivable);
  return s;
}

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_scene(os, scene);
}

Scene load_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_scene(is);
}

}  // namespace feasplan::scene
