#include "feasplan/common/error.hpp"
#include "feasplan/harness/config.hpp"
#include "feasplan/harness/dataset.hpp"
#include "feasplan/harness/eval.hpp"
#include "feasplan/harness/io.hpp"
#include "feasplan/harness/pipeline.hpp"
#include "feasplan/harness/render.hpp"
#include "feasplan/harness/timing.hpp"
#include "feasplan/harness/workers.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>

namespace hs = feasplan::harness;
namespace sc = feasplan::scene;
namespace dn = feasplan::denoiser;
namespace fs = std::filesystem;

namespace {

hs::RunConfig small_config() {
  hs::RunConfig cfg;
  cfg.model.width = 16;
  cfg.model.hidden_layers = 2;
  cfg.schedule.steps = 10;
  cfg.data.eval_scenes = 12;
  cfg.data.eval_narrow = 4;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("feasplan_test_" + name);
  fs::remove_all(p);
  return p;
}

const std::vector<hs::SceneCase>& expert_suite() {
  static const auto cases = [] {
    hs::RunConfig cfg;
    cfg.data.eval_scenes = 50;
    cfg.data.eval_narrow = 15;
    return hs::build_eval_suite(cfg, 2);
  }();
  return cases;
}

}  // namespace

TEST_CASE("config text round trip is idempotent") {
  hs::RunConfig cfg;
  const std::string text = hs::to_text(cfg);
  CHECK(hs::to_text(hs::parse_config(text)) == text);

  hs::apply_override(cfg, "train.lambda_cur=0");
  hs::apply_override(cfg, "guidance.eta=0.125");
  hs::apply_override(cfg, "schedule.kind=linear");
  hs::apply_override(cfg, "model.mode=predict_eps");
  hs::apply_override(cfg, "run.seed=77");
  const std::string changed = hs::to_text(cfg);
  CHECK(changed != text);
  const auto back = hs::parse_config(changed);
  CHECK(hs::to_text(back) == changed);
  CHECK(back.train.lambda_cur == 0.0);
  CHECK(back.guidance.eta == 0.125);
  CHECK(back.seed == 77);
  CHECK(hs::config_hash(back) == hs::config_hash(cfg));
  CHECK(hs::config_hash(back) != hs::config_hash(hs::RunConfig{}));
}

TEST_CASE("config rejects unknown keys and bad values") {
  hs::RunConfig cfg;
  CHECK_THROWS_AS(hs::apply_override(cfg, "train.nonsense=1"), feasplan::InvalidArgument);
  CHECK_THROWS_AS(hs::apply_override(cfg, "train.steps"), feasplan::InvalidArgument);
  CHECK_THROWS(hs::apply_override(cfg, "train.steps=abc"));
  CHECK_THROWS(hs::parse_config("[train]\nbogus = 3\n"));
  CHECK_THROWS(hs::parse_config("[nowhere]\nsteps = 3\n"));
  const auto partial = hs::parse_config("# comment\n[train]\nsteps = 12\n");
  CHECK(partial.train.steps == 12);
  CHECK(partial.model.width == hs::RunConfig{}.model.width);
  CHECK(hs::config_keys().size() > 40);
}

TEST_CASE("manifest and number formatting round trip") {
  const hs::Manifest m{{"a", "1"}, {"config_hash", "00ff"}, {"seed", "42"}};
  const auto back = hs::parse_manifest(hs::manifest_text(m));
  CHECK(back == m);
  CHECK(hs::manifest_value(back, "seed") == "42");
  CHECK_THROWS_AS(hs::manifest_value(back, "missing"), feasplan::FormatError);
  for (double v : {0.1, 1.0 / 3.0, -2.5e-12, 12345.678}) CHECK(hs::parse_number(hs::format_number(v)) == v);
}

TEST_CASE("staged directories promote on commit only") {
  const auto target = scratch("staged");
  {
    hs::StagedDir d(target);
    hs::write_file_atomic(d.file("x.txt"), "abc");
  }
  CHECK_FALSE(fs::exists(target));
  {
    hs::StagedDir d(target);
    hs::write_file_atomic(d.file("x.txt"), "abc");
    d.commit();
  }
  CHECK(hs::read_file(target / "x.txt") == "abc");
  {
    hs::StagedDir d(target);
    hs::write_file_atomic(d.file("y.txt"), "def");
    d.commit();
  }
  CHECK_FALSE(fs::exists(target / "x.txt"));
  CHECK(hs::read_file(target / "y.txt") == "def");
  fs::remove_all(target);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  for (int workers : {1, 3}) {
    std::vector<int> hit(100, 0);
    hs::parallel_for(hit.size(), workers, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    try {
      hs::parallel_for(50, workers, [](std::size_t i) {
        if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
  }
}

TEST_CASE("experts are feasible on a 50-scene suite") {
  const hs::RunConfig cfg;
  std::vector<hs::EvalRow> rows;
  for (const auto& c : expert_suite()) rows.push_back(hs::score(c, c.expert, cfg));
  const auto all = hs::summarize(rows);
  CHECK(all.scenes == 50);
  CHECK(all.curvature_rate == 0.0);
  CHECK(all.drivable_rate == 0.0);
  CHECK(all.mean_ade == 0.0);
  CHECK(all.mean_progress == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hs::summarize(rows, hs::Subset::narrow).scenes == 15);
}

TEST_CASE("aggregate rates are the means of the flag columns") {
  std::vector<hs::EvalRow> rows(7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].scene = i;
    rows[i].curvature_violation = i % 2 == 0;
    rows[i].drivable_violation = i % 3 == 0;
    rows[i].narrow = i >= 4;
    rows[i].ade = 0.1 * static_cast<double>(i);
  }
  const auto s = hs::summarize(rows);
  CHECK(s.curvature_rate == 4.0 / 7.0);
  CHECK(s.drivable_rate == 3.0 / 7.0);
  const auto n = hs::summarize(rows, hs::Subset::narrow);
  CHECK(n.scenes == 3);
  CHECK(n.curvature_rate == 2.0 / 3.0);
  const auto back = hs::parse_rows_csv(hs::rows_csv(rows));
  CHECK(back == rows);
  CHECK_THROWS_AS(hs::parse_rows_csv("scene,narrow\n1,0\n"), feasplan::FormatError);
}

TEST_CASE("report compared with itself has zero deltas") {
  const hs::RunConfig cfg;
  hs::EvalReport r;
  for (const auto& c : expert_suite()) r.rows.push_back(hs::score(c, c.expert, cfg));
  const auto dir = scratch("report");
  fs::create_directories(dir);
  hs::write_report(dir, r);
  const auto back = hs::read_report(dir);
  CHECK(back.rows == r.rows);
  const std::string table = hs::diff_reports(back, r);
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  int lines = 0;
  while (std::getline(is, line)) {
    ++lines;
    CHECK(line.substr(line.rfind(',') + 1) == "0");
  }
  CHECK(lines == 24);
  fs::remove_all(dir);
}

TEST_CASE("sampling a suite does not depend on the worker count") {
  const auto cfg = small_config();
  const auto cases = hs::build_eval_suite(cfg, 1);
  const auto params = dn::init_params(cfg.network_shape(), cfg.model.mode, 3);
  const auto a = hs::plan_suite(params, cases, cfg, 1);
  const auto b = hs::plan_suite(params, cases, cfg, 3);
  REQUIRE(a.size() == cases.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].trajectory == b[i].trajectory);
  std::vector<hs::EvalRow> ra;
  std::vector<hs::EvalRow> rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ra.push_back(hs::score(cases[i], a[i].trajectory, cfg, a[i].stats.triggered_steps));
    rb.push_back(hs::score(cases[i], b[i].trajectory, cfg, b[i].stats.triggered_steps));
  }
  CHECK(hs::rows_csv(ra) == hs::rows_csv(rb));
}

TEST_CASE("checkpoints with a different schedule are refused") {
  auto cfg = small_config();
  const auto params = dn::init_params(cfg.network_shape(), cfg.model.mode, 1);
  const auto dir = scratch("ckpt");
  fs::create_directories(dir);
  const auto path = (dir / "c.txt").string();
  hs::write_file_atomic(path, hs::checkpoint_text(params, hs::checkpoint_meta(cfg)));
  CHECK(hs::load_model(path, cfg).params.hash() == params.hash());
  cfg.schedule.steps = 12;
  CHECK_THROWS_AS(hs::load_model(path, cfg), feasplan::InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("isolines trace the zero level of a square") {
  const sc::Polygon square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const auto grid = sc::build_sdf(square, sc::bounding_box(square, 2.0), 0.5);
  const auto segs = hs::isoline(grid, 0.0);
  REQUIRE(segs.size() > 40);
  for (const auto& s : segs) {
    for (const auto p : {s.a, s.b}) CHECK(std::abs(sc::signed_distance(square, p)) < 0.36);
  }
  CHECK(hs::isoline(grid, 100.0).empty());
}

TEST_CASE("rendering is pure") {
  const auto& c = expert_suite().front();
  hs::RenderInput in;
  in.scene = &c.scene;
  in.grid = &c.grid;
  in.expert = c.expert;
  in.plan = c.expert;
  const auto a = hs::render_svg(in);
  const auto b = hs::render_svg(in);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("<polygon") != std::string::npos);
  CHECK(a.find("<path") != std::string::npos);
  in.footprint_stride = 0;
  CHECK_THROWS_AS(hs::render_svg(in), feasplan::InvalidArgument);
}

TEST_CASE("timing probe stages") {
  auto cfg = small_config();
  const auto cases = hs::build_eval_suite(cfg, 1);
  const std::span<const hs::SceneCase> few(cases.data(), 3);
  const auto params = dn::init_params(cfg.network_shape(), cfg.model.mode, 2);
  cfg.guidance.enabled = false;
  for (const auto& r : hs::timing_probe(params, few, cfg)) {
    CHECK(r.guidance_calls == 0);
    CHECK(r.guidance_seconds == 0.0);
    CHECK(r.predict_seconds + r.guidance_seconds <= r.sample_seconds);
  }
  cfg.guidance.enabled = true;
  for (const auto& r : hs::timing_probe(params, few, cfg)) {
    CHECK(r.guidance_calls == cfg.schedule.steps);
    CHECK(r.predict_seconds + r.guidance_seconds <= r.sample_seconds);
  }
  const double cells[] = {0.4, 0.2, 0.1};
  const auto scaling = hs::sdf_scaling(cases.front().scene, cells);
  CHECK(scaling[0].cells < scaling[1].cells);
  CHECK(scaling[1].cells < scaling[2].cells);
  CHECK(scaling[0].seconds < scaling[1].seconds);
  CHECK(scaling[1].seconds < scaling[2].seconds);
}

TEST_CASE("worker count from the environment") {
  ::setenv("FEASPLAN_WORKERS", "3", 1);
  CHECK(hs::default_workers() == 3);
  ::setenv("FEASPLAN_WORKERS", "zero", 1);
  CHECK_THROWS(hs::default_workers());
  ::unsetenv("FEASPLAN_WORKERS");
  CHECK(hs::default_workers() == 1);
}
