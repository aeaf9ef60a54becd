#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/grad_check.hpp"
#include "feasplan/diffcore/ops.hpp"
#include "feasplan/geometry/curvature.hpp"
#include "feasplan/scene/footprint.hpp"
#include "feasplan/scene/polygon.hpp"
#include "feasplan/scene/scene.hpp"
#include "feasplan/scene/sdf.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace dc = feasplan::diffcore;
namespace geo = feasplan::geometry;
namespace sc = feasplan::scene;

namespace {

sc::Polygon square(double a) { return {{-a, -a}, {a, -a}, {a, a}, {-a, a}}; }

sc::SdfGrid constant_grid(double value) {
  sc::SdfGrid g;
  g.origin = {-50.0, -50.0};
  g.cell = 1.0;
  g.width = 101;
  g.height = 101;
  g.values.assign(101 * 101, value);
  return g;
}

sc::SdfGrid random_grid(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  sc::SdfGrid g;
  g.origin = {-1.0, 2.0};
  g.cell = 0.25;
  g.width = w;
  g.height = h;
  g.values.resize(static_cast<std::size_t>(w * h));
  for (double& v : g.values) v = u(rng);
  return g;
}

geo::Trajectory single_pose(double x, double y, double theta) {
  geo::Trajectory t;
  t.points.push_back({x, y, theta});
  return t;
}

// Random simple star-shaped polygon around the origin.
sc::Polygon random_star(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> r(rmin, rmax);
  const int n = 9;
  sc::Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    const double rad = r(rng);
    p.push_back({rad * std::cos(a), rad * std::sin(a)});
  }
  return p;
}

}  // namespace

TEST_CASE("polygon primitives") {
  const auto sq = square(5.0);
  CHECK(sc::signed_area(sq) == doctest::Approx(100.0));
  CHECK(sc::is_simple(sq));
  sc::Polygon bowtie{{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  CHECK_FALSE(sc::is_simple(bowtie));
  CHECK_THROWS_AS(sc::validate_polygon(bowtie), feasplan::InvalidArgument);
  sc::Polygon flat{{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(sc::validate_polygon(flat), feasplan::InvalidArgument);
  CHECK(sc::point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(sc::point_segment_distance({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5.0));
}

TEST_CASE("signed distance on a square") {
  const auto sq = square(5.0);
  CHECK(sc::signed_distance(sq, {0, 0}) == doctest::Approx(5.0));
  CHECK(sc::signed_distance(sq, {5, 0}) == 0.0);
  CHECK(sc::signed_distance(sq, {7, 0}) == doctest::Approx(-2.0));
  CHECK(sc::signed_distance(sq, {8, 9}) == doctest::Approx(-5.0));
}

TEST_CASE("signed distance matches the winding-number oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  for (int s = 0; s < 10; ++s) {
    const auto poly = random_star(rng, 4.0, 9.0);
    for (int k = 0; k < 100; ++k) {
      const sc::Vec2 q{u(rng), u(rng)};
      CHECK(sc::signed_distance(poly, q) ==
            doctest::Approx(feasplan::testing::brute_force_sdf(poly, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_sdf on a square") {
  const auto sq = square(5.0);
  const sc::Bounds b{-10, -10, 10, 10};
  const auto g = sc::build_sdf(sq, b, 0.5);
  CHECK(g.width == 41);
  CHECK(g.height == 41);
  CHECK(g.at(20, 20) == doctest::Approx(5.0));  // centre
  CHECK(g.at(30, 20) == 0.0);                   // (5, 0)
  CHECK(g.at(34, 20) == doctest::Approx(-2.0)); // (7, 0)
  for (double v : g.values) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(sc::build_sdf(sq, b, 0.0), feasplan::InvalidArgument);
  CHECK_THROWS_AS(sc::build_sdf(sc::Polygon{{0, 0}, {1, 1}}, b, 0.5), feasplan::InvalidArgument);
}

TEST_CASE("sdf is symmetric for a symmetric polygon") {
  // Symmetric about the x axis: vertices mirrored in y.
  sc::Polygon p{{-6, -2}, {0, -4}, {7, -1}, {7, 1}, {0, 4}, {-6, 2}};
  const sc::Bounds b{-10, -8, 10, 8};
  const auto g = sc::build_sdf(p, b, 0.25);
  REQUIRE(g.height % 2 == 1);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      CHECK(std::abs(g.at(ix, iy) - g.at(ix, g.height - 1 - iy)) < 1e-9);
    }
  }
}

TEST_CASE("fast distance transform agrees within a cell diagonal") {
  std::mt19937_64 rng(7);
  for (int s = 0; s < 5; ++s) {
    const auto poly = random_star(rng, 3.0, 6.0);
    const double cell = 0.25;
    const sc::Bounds b{-7.875, -7.875, 7.875, 7.875};  // 64 x 64 cells
    const auto exact = sc::build_sdf(poly, b, cell);
    const auto fast = sc::build_sdf_fast(poly, b, cell);
    REQUIRE(exact.width == 64);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.values.size(); ++i) {
      worst = std::max(worst, std::abs(exact.values[i] - fast.values[i]));
    }
    CHECK(worst <= cell * std::numbers::sqrt2);
  }
}

TEST_CASE("bilinear sampling") {
  sc::SdfGrid g;
  g.origin = {0.0, 0.0};
  g.cell = 0.5;
  g.width = 2;
  g.height = 2;
  g.values = {1.0, 3.0, 1.0, 3.0};
  CHECK(sc::sample_sdf(g, {0.0, 0.0}).value == 1.0);
  CHECK(sc::sample_sdf(g, {0.5, 0.5}).value == 3.0);
  const auto mid = sc::sample_sdf(g, {0.25, 0.0});
  CHECK(mid.value == doctest::Approx(2.0));
  CHECK(mid.gradient.x == doctest::Approx(2.0 / 0.5));
  CHECK(mid.gradient.y == doctest::Approx(0.0));

  // Outside: clamp to (0.5, 0.25) and subtract the distance 1.5.
  const auto out = sc::sample_sdf(g, {2.0, 0.25});
  CHECK(out.value == doctest::Approx(3.0 - 1.5));
  CHECK(out.gradient.x == doctest::Approx(-1.0));
}

TEST_CASE("sample_sdf gradient matches central differences") {
  std::mt19937_64 rng(13);
  const auto g = random_grid(rng, 12, 9);
  std::uniform_real_distribution<double> cell_pos(0.1, 0.9);
  std::uniform_int_distribution<int> ix(0, g.width - 2);
  std::uniform_int_distribution<int> iy(0, g.height - 2);
  const double h = 1e-7;
  for (int k = 0; k < 100; ++k) {
    const sc::Vec2 q{g.origin.x + (ix(rng) + cell_pos(rng)) * g.cell,
                     g.origin.y + (iy(rng) + cell_pos(rng)) * g.cell};
    const auto s = sc::sample_sdf(g, q);
    const double gx = (sc::sample_sdf(g, {q.x + h, q.y}).value -
                       sc::sample_sdf(g, {q.x - h, q.y}).value) / (2 * h);
    const double gy = (sc::sample_sdf(g, {q.x, q.y + h}).value -
                       sc::sample_sdf(g, {q.x, q.y - h}).value) / (2 * h);
    CHECK(std::abs(s.gradient.x - gx) / (std::abs(gx) + 1e-12) < 1e-6);
    CHECK(std::abs(s.gradient.y - gy) / (std::abs(gy) + 1e-12) < 1e-6);
  }
}

TEST_CASE("sample_sdf is continuous across cell boundaries") {
  std::mt19937_64 rng(17);
  const auto g = random_grid(rng, 8, 8);
  const double eps = 1e-14;
  for (int i = 1; i < 7; ++i) {
    const double bx = g.origin.x + i * g.cell;
    const double y = g.origin.y + 3.37 * g.cell;
    CHECK(std::abs(sc::sample_sdf(g, {bx - eps, y}).value - sc::sample_sdf(g, {bx + eps, y}).value) <
          1e-12);
    const double by = g.origin.y + i * g.cell;
    const double x = g.origin.x + 2.71 * g.cell;
    CHECK(std::abs(sc::sample_sdf(g, {x, by - eps}).value - sc::sample_sdf(g, {x, by + eps}).value) <
          1e-12);
  }
  // Grid edge to extrapolated region.
  const double ex = g.origin.x + (g.width - 1) * g.cell;
  CHECK(std::abs(sc::sample_sdf(g, {ex - eps, 2.5}).value - sc::sample_sdf(g, {ex + eps, 2.5}).value) <
        1e-12);
}

TEST_CASE("tape sample_sdf matches the value path") {
  std::mt19937_64 rng(19);
  const auto g = random_grid(rng, 10, 10);
  dc::Tape tape;
  dc::Tensor qx(1, 3);
  dc::Tensor qy(1, 3);
  qx << -0.7, 0.3, 5.0;
  qy << 2.3, 3.1, 2.4;
  dc::Var vx = tape.leaf(qx);
  dc::Var vy = tape.leaf(qy);
  dc::Var d = sc::sample_sdf(g, vx, vy);
  auto grads = tape.backward(dc::sum(d));
  for (int i = 0; i < 3; ++i) {
    const auto s = sc::sample_sdf(g, {qx(0, i), qy(0, i)});
    CHECK(d.value()(0, i) == s.value);
    CHECK(grads.at(vx.id())(0, i) == s.gradient.x);
    CHECK(grads.at(vy.id())(0, i) == s.gradient.y);
  }
}

TEST_CASE("footprint corners") {
  sc::Footprint fp{4.0, 2.0, 0.0};
  auto c = sc::footprint_corners({0, 0, 0}, fp);
  CHECK(c[0] == sc::Vec2{2, 1});
  CHECK(c[1] == sc::Vec2{2, -1});
  CHECK(c[2] == sc::Vec2{-2, -1});
  CHECK(c[3] == sc::Vec2{-2, 1});

  c = sc::footprint_corners({0, 0, std::numbers::pi / 2}, fp);
  CHECK(c[0].x == doctest::Approx(-1.0));
  CHECK(c[0].y == doctest::Approx(2.0));
  CHECK(c[2].x == doctest::Approx(1.0));
  CHECK(c[2].y == doctest::Approx(-2.0));

  c = sc::footprint_corners({10, 5, std::numbers::pi}, fp);
  CHECK(c[0].x == doctest::Approx(8.0));
  CHECK(c[0].y == doctest::Approx(4.0));
}

TEST_CASE("inverse pose transform recovers corner offsets") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  sc::Footprint fp{4.6, 1.9, 0.4};
  const auto offsets = sc::footprint_offsets(fp);
  for (int k = 0; k < 100; ++k) {
    const geo::Waypoint p{40 * u(rng), 40 * u(rng), std::numbers::pi * u(rng)};
    const auto corners = sc::footprint_corners(p, fp);
    for (std::size_t j = 0; j < 4; ++j) {
      const double dx = corners[j].x - p.x;
      const double dy = corners[j].y - p.y;
      const double lx = std::cos(p.theta) * dx + std::sin(p.theta) * dy;
      const double ly = -std::sin(p.theta) * dx + std::cos(p.theta) * dy;
      CHECK(std::abs(lx - offsets[j].x) < 1e-12);
      CHECK(std::abs(ly - offsets[j].y) < 1e-12);
    }
  }
}

TEST_CASE("drivable loss values") {
  const sc::GuardedLossConfig cfg;
  sc::Footprint fp{4.0, 2.0, 0.0};
  geo::Trajectory t;
  t.points = {{0, 0, 0}, {1, 2, 0.4}, {-3, 1, 2.0}};
  CHECK(sc::drivable_loss(t, constant_grid(cfg.m_safe), fp, cfg) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(sc::drivable_loss(t, constant_grid(cfg.m_safe + 20.0), fp, cfg) < 1e-8);
}

TEST_CASE("min footprint sdf at the centre of a square") {
  const auto g = sc::build_sdf(square(5.0), {-10, -10, 10, 10}, 0.2);
  sc::Footprint fp{4.0, 2.0, 0.0};
  const double d = sc::min_footprint_sdf(single_pose(0, 0, 0), g, fp);
  CHECK(d == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d >= 5.0 - std::sqrt(5.0));
  CHECK_FALSE(sc::drivable_violation(single_pose(0, 0, 0), g, fp));
  CHECK(sc::drivable_violation(single_pose(4.5, 0, 0), g, fp));
}

TEST_CASE("drivable loss gradient matches central differences") {
  const auto g = sc::build_sdf(square(5.0), {-10, -10, 10, 10}, 0.2);
  sc::Footprint fp{4.0, 2.0, 0.0};
  const sc::GuardedLossConfig cfg;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    dc::Tensor pose(3, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      pose(0, i) = 3.0 * u(rng) + 0.0137;
      pose(1, i) = 3.0 * u(rng) + 0.0291;
      pose(2, i) = std::numbers::pi * u(rng);
    }
    dc::ScalarFunction f = [&](dc::Tape& tape, dc::Var p) {
      auto pick = [&](int r) {
        dc::Tensor e = dc::Tensor::Zero(1, 3);
        e(0, r) = 1.0;
        return dc::matmul(tape.constant(e), p);
      };
      return sc::drivable_loss(g, fp, cfg, pick(0), pick(1), pick(2));
    };
    INFO("trial " << k);
    CHECK(dc::grad_check(f, pose, 1e-6) < 1e-3);
  }
}

TEST_CASE("drivable loss decreases along its negative gradient") {
  const auto g = sc::build_sdf(square(5.0), {-10, -10, 10, 10}, 0.2);
  sc::Footprint fp{4.0, 2.0, 0.0};
  const sc::GuardedLossConfig cfg;
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    dc::Tensor x(1, 3);
    dc::Tensor y(1, 3);
    dc::Tensor th(1, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      x(0, i) = 4.5 + 2.0 * u(rng);  // footprint pokes out of the right edge
      y(0, i) = 2.0 * u(rng);
      th(0, i) = 0.3 * u(rng);
    }
    dc::Tape tape;
    dc::Var vx = tape.leaf(x);
    dc::Var vy = tape.leaf(y);
    dc::Var vt = tape.leaf(th);
    dc::Var loss = sc::drivable_loss(g, fp, cfg, vx, vy, vt);
    auto grads = tape.backward(loss);
    // Translate every pose by the summed negative positional gradient.
    const double gx = grads.at(vx.id()).sum();
    const double gy = grads.at(vy.id()).sum();
    const double step = 1e-3;
    dc::Tape t2;
    dc::Var loss2 = sc::drivable_loss(g, fp, cfg, t2.constant(x.array() - step * gx),
                                      t2.constant(y.array() - step * gy), t2.constant(th));
    CHECK(loss2.scalar() < loss.scalar());
  }
}

TEST_CASE("drivable violation rate") {
  const auto g = sc::build_sdf(square(5.0), {-10, -10, 10, 10}, 0.2);
  sc::Footprint fp{4.0, 2.0, 0.0};
  const geo::Trajectory inside = single_pose(0, 0, 0);
  const geo::Trajectory far = single_pose(100, 100, 0);
  CHECK(sc::drivable_violation(far, g, fp));
  std::vector<sc::PlannedTrajectory> set(8, {&inside, &g});
  set[1].trajectory = &far;
  set[6].trajectory = &far;
  CHECK(sc::drivable_violation_rate(set, fp) == 0.25);
  CHECK_THROWS_AS(sc::drivable_violation_rate(std::span<const sc::PlannedTrajectory>{}, fp),
                  feasplan::InvalidArgument);
}

TEST_CASE("scene generation is deterministic") {
  const sc::SceneParams params;
  const auto a = sc::generate_scene(42, params);
  const auto b = sc::generate_scene(42, params);
  CHECK(a.scene == b.scene);
  CHECK(a.expert == b.expert);
  std::stringstream sa;
  std::stringstream sb;
  sc::write_scene(sa, a.scene);
  sc::write_scene(sb, b.scene);
  CHECK(sa.str() == sb.str());
  CHECK_FALSE(sc::generate_scene(43, params).scene == a.scene);
}

TEST_CASE("generated experts are feasible") {
  const geo::CurvatureConfig curv;
  const sc::Footprint fp;
  for (bool narrow : {false, true}) {
    const sc::SceneParams params = narrow ? sc::narrow_params() : sc::SceneParams{};
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const auto gen = sc::generate_scene(seed, params, curv, fp);
      INFO("seed " << seed << " narrow " << narrow);
      CHECK(gen.expert.size() == params.horizon);
      CHECK(sc::is_simple(gen.scene.drivable));
      CHECK(sc::signed_area(gen.scene.drivable) > 0.0);
      CHECK_FALSE(geo::curvature_violation(gen.expert, curv));
      const auto grid = sc::build_sdf(gen.scene, 0.2);
      CHECK(sc::min_footprint_sdf(gen.expert, grid, fp) > 0.0);
      CHECK(sc::signed_distance(gen.scene.drivable, gen.scene.goal) > 0.0);
      CHECK(sc::signed_distance(gen.scene.drivable,
                                {gen.scene.start_pose.x, gen.scene.start_pose.y}) > 0.0);
      for (const auto& c : gen.scene.centerline) {
        CHECK(sc::signed_distance(gen.scene.drivable, c) > 0.0);
      }
    }
  }
}

TEST_CASE("infeasible scene parameters are rejected") {
  sc::SceneParams p;
  p.min_turn_radius = 3.0;  // tighter than 1 / kappa_geo
  CHECK_THROWS_AS(sc::generate_scene(1, p), feasplan::InvalidArgument);
  p = {};
  p.min_width = 1.0;  // narrower than the footprint
  CHECK_THROWS_AS(sc::generate_scene(1, p), feasplan::InvalidArgument);
  p = {};
  p.max_width = 2.0;
  CHECK_THROWS_AS(sc::generate_scene(1, p), feasplan::InvalidArgument);
}

TEST_CASE("centerline projection") {
  const auto gen = sc::generate_scene(5, sc::SceneParams{});
  const double s0 = sc::project_onto_centerline(gen.scene, {0.0, 0.0});
  const double s1 = sc::project_onto_centerline(gen.scene, gen.scene.goal);
  CHECK(s1 > s0);
}

TEST_CASE("scene text round-trips exactly") {
  const auto gen = sc::generate_scene(9, sc::narrow_params());
  std::stringstream ss;
  sc::write_scene(ss, gen.scene);
  const sc::Scene back = sc::read_scene(ss);
  CHECK(back == gen.scene);
  std::stringstream bad("feasplan_scene 2\n");
  CHECK_THROWS_AS(sc::read_scene(bad), feasplan::FormatError);
}
