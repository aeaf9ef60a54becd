#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/harness/config.hpp"
#include "feasplan/harness/dataset.hpp"
#include "feasplan/harness/eval.hpp"
#include "feasplan/harness/io.hpp"
#include "feasplan/harness/pipeline.hpp"
#include "feasplan/harness/render.hpp"
#include "feasplan/harness/timing.hpp"
#include "feasplan/harness/workers.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace hs = feasplan::harness;
using feasplan::hex64;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
  std::string checkpoint;
  std::string split = "eval";
  bool experts = false;
  std::size_t limit = 0;
  std::vector<std::string> reports;
};

hs::RunConfig resolve(const Options& o) {
  hs::RunConfig cfg = o.config.empty() ? hs::RunConfig{} : hs::load_config(o.config);
  for (const auto& kv : o.overrides) hs::apply_override(cfg, kv);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

hs::Manifest base_manifest(const std::string& command, const hs::RunConfig& cfg) {
  return {{"command", command},
          {"config_hash", hex64(hs::config_hash(cfg))},
          {"seed", std::to_string(cfg.seed)},
          {"schedule_hash", hex64(cfg.make_schedule().hash())}};
}

void require_out(const Options& o) {
  if (o.out.empty()) throw feasplan::InvalidArgument("--out is required");
}

void require_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw feasplan::InvalidArgument("--checkpoint is required");
}

std::vector<hs::SceneCase> suite(const Options& o, const hs::RunConfig& cfg) {
  if (o.split != "train" && o.split != "eval") {
    throw feasplan::InvalidArgument("--split must be train or eval, got '" + o.split + "'");
  }
  auto spec = o.split == "train" ? hs::train_suite_spec(cfg) : hs::eval_suite_spec(cfg);
  if (o.limit > 0 && o.limit < spec.count) {
    // Keep the narrow tail proportionally represented.
    spec.narrow = spec.count ? spec.narrow * o.limit / spec.count : 0;
    spec.count = o.limit;
  }
  return hs::build_suite(spec, cfg.curvature, cfg.footprint, o.workers);
}

std::string scene_name(const hs::SceneCase& c) { return std::to_string(c.scene.seed); }

void write_common(const hs::StagedDir& dir, const hs::RunConfig& cfg, const hs::Manifest& m) {
  hs::write_file_atomic(dir.file("config.txt"), hs::to_text(cfg));
  hs::write_file_atomic(dir.file("manifest.txt"), hs::manifest_text(m));
}

void cmd_gen_scenes(const Options& o) {
  require_out(o);
  const auto cfg = resolve(o);
  const auto cases = suite(o, cfg);
  hs::StagedDir dir(o.out);
  for (const auto& c : cases) {
    std::ostringstream s;
    feasplan::scene::write_scene(s, c.scene);
    hs::write_file_atomic(dir.file("scene_" + scene_name(c) + ".txt"), s.str());
    std::ostringstream e;
    feasplan::geometry::write_trajectory(e, c.expert);
    hs::write_file_atomic(dir.file("expert_" + scene_name(c) + ".txt"), e.str());
  }
  auto m = base_manifest("gen-scenes", cfg);
  m.emplace_back("split", o.split);
  m.emplace_back("scenes", std::to_string(cases.size()));
  write_common(dir, cfg, m);
  dir.commit();
}

void cmd_train(const Options& o) {
  require_out(o);
  const auto cfg = resolve(o);
  const auto cases = hs::build_train_suite(cfg, o.workers);
  const auto result = hs::train_model(cfg, cases, [](int step, double loss) {
    if (step % 500 == 0) std::cerr << "step " << step << " loss " << loss << '\n';
  });
  hs::StagedDir dir(o.out);
  const auto meta = hs::checkpoint_meta(cfg);
  hs::write_file_atomic(dir.file("checkpoint.txt"), hs::checkpoint_text(result.params, meta));
  std::string trace = "step,loss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    trace += std::to_string(i) + ',' + hs::format_number(result.loss_trace[i]) + '\n';
  }
  hs::write_file_atomic(dir.file("loss.csv"), trace);
  auto m = base_manifest("train", cfg);
  m.emplace_back("train_scenes", std::to_string(cases.size()));
  m.emplace_back("checkpoint_hash", hex64(result.params.hash()));
  write_common(dir, cfg, m);
  dir.commit();
}

void cmd_grpo(const Options& o) {
  require_out(o);
  require_checkpoint(o);
  const auto cfg = resolve(o);
  const auto il = hs::load_model(o.checkpoint, cfg);
  const auto cases = hs::build_train_suite(cfg, o.workers);
  const auto result = hs::finetune_model(cfg, il.params, cases, [](const feasplan::grpo::GrpoRecord& r) {
    if (r.iteration % 50 == 0) {
      std::cerr << "iteration " << r.iteration << " reward " << r.mean_reward << '\n';
    }
  });
  hs::StagedDir dir(o.out);
  hs::write_file_atomic(dir.file("checkpoint.txt"),
                        hs::checkpoint_text(result.params, hs::checkpoint_meta(cfg)));
  std::string trace = "iteration,scene_index,mean_reward,reward_std,mean_task,mean_feasibility,loss\n";
  for (const auto& r : result.trace) {
    trace += std::to_string(r.iteration) + ',' + std::to_string(r.scene_index) + ',' +
             hs::format_number(r.mean_reward) + ',' + hs::format_number(r.reward_std) + ',' +
             hs::format_number(r.mean_task) + ',' + hs::format_number(r.mean_feasibility) + ',' +
             hs::format_number(r.loss) + '\n';
  }
  hs::write_file_atomic(dir.file("rewards.csv"), trace);
  auto m = base_manifest("grpo", cfg);
  m.emplace_back("init_checkpoint_hash", hex64(il.params.hash()));
  m.emplace_back("checkpoint_hash", hex64(result.params.hash()));
  write_common(dir, cfg, m);
  dir.commit();
}

void cmd_sample(const Options& o) {
  require_out(o);
  require_checkpoint(o);
  const auto cfg = resolve(o);
  const auto ck = hs::load_model(o.checkpoint, cfg);
  const auto cases = suite(o, cfg);
  const auto plans = hs::plan_suite(ck.params, cases, cfg, o.workers);
  hs::StagedDir dir(o.out);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::ostringstream s;
    feasplan::geometry::write_trajectory(s, plans[i].trajectory);
    hs::write_file_atomic(dir.file("plan_" + scene_name(cases[i]) + ".txt"), s.str());
  }
  auto m = base_manifest("sample", cfg);
  m.emplace_back("checkpoint_hash", hex64(ck.params.hash()));
  m.emplace_back("scenes", std::to_string(cases.size()));
  write_common(dir, cfg, m);
  dir.commit();
}

void cmd_eval(const Options& o) {
  require_out(o);
  if (o.experts == !o.checkpoint.empty()) {
    throw feasplan::InvalidArgument("eval needs exactly one of --checkpoint or --experts");
  }
  const auto cfg = resolve(o);
  const auto cases = suite(o, cfg);
  hs::EvalReport report;
  report.manifest = base_manifest("eval", cfg);
  report.manifest.emplace_back("split", o.split);
  if (o.experts) {
    report.manifest.emplace_back("planner", "expert");
    for (const auto& c : cases) report.rows.push_back(hs::score(c, c.expert, cfg));
  } else {
    const auto ck = hs::load_model(o.checkpoint, cfg);
    report.manifest.emplace_back("planner", "model");
    report.manifest.emplace_back("checkpoint_hash", hex64(ck.params.hash()));
    const auto plans = hs::plan_suite(ck.params, cases, cfg, o.workers);
    for (std::size_t i = 0; i < cases.size(); ++i) {
      report.rows.push_back(hs::score(cases[i], plans[i].trajectory, cfg, plans[i].stats.triggered_steps));
    }
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const hs::EvalRow& a, const hs::EvalRow& b) { return a.scene < b.scene; });
  hs::StagedDir dir(o.out);
  hs::write_report(dir.path(), report);
  hs::write_file_atomic(dir.file("config.txt"), hs::to_text(cfg));
  dir.commit();
  std::cout << hs::summary_text(report);
}

void cmd_render(const Options& o) {
  require_out(o);
  const auto cfg = resolve(o);
  const auto cases = suite(o, cfg);
  std::optional<feasplan::denoiser::Checkpoint> ck;
  std::vector<hs::Plan> plans;
  if (!o.checkpoint.empty()) {
    ck = hs::load_model(o.checkpoint, cfg);
    plans = hs::plan_suite(ck->params, cases, cfg, o.workers);
  }
  hs::StagedDir dir(o.out);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    hs::RenderInput in;
    in.scene = &cases[i].scene;
    in.grid = &cases[i].grid;
    in.footprint = cfg.footprint;
    in.safety_margin = cfg.guidance.guard.m_safe;
    in.expert = cases[i].expert;
    if (ck) in.plan = plans[i].trajectory;
    hs::write_file_atomic(dir.file("scene_" + scene_name(cases[i]) + ".svg"), hs::render_svg(in));
  }
  auto m = base_manifest("render", cfg);
  if (ck) m.emplace_back("checkpoint_hash", hex64(ck->params.hash()));
  write_common(dir, cfg, m);
  dir.commit();
}

void cmd_report(const Options& o) {
  const auto a = hs::read_report(o.reports.at(0));
  const auto b = hs::read_report(o.reports.at(1));
  const std::string table = hs::diff_reports(a, b);
  if (o.out.empty()) {
    std::cout << table;
  } else {
    hs::write_file_atomic(o.out, table);
  }
}

void cmd_timing(const Options& o) {
  require_out(o);
  require_checkpoint(o);
  const auto cfg = resolve(o);
  const auto ck = hs::load_model(o.checkpoint, cfg);
  const auto cases = suite(o, cfg);
  const auto rows = hs::timing_probe(ck.params, cases, cfg);
  const double cells[] = {0.4, 0.2, 0.1};
  const auto scaling = hs::sdf_scaling(cases.front().scene, cells);
  std::string sc = "cell,cells,seconds\n";
  for (const auto& r : scaling) {
    sc += hs::format_number(r.cell) + ',' + std::to_string(r.cells) + ',' + hs::format_number(r.seconds) + '\n';
  }
  hs::StagedDir dir(o.out);
  hs::write_file_atomic(dir.file("timing.csv"), hs::timing_csv(rows));
  hs::write_file_atomic(dir.file("sdf_scaling.csv"), sc);
  const std::string text = hs::timing_text(hs::summarize(rows));
  hs::write_file_atomic(dir.file("summary.txt"), text);
  write_common(dir, cfg, base_manifest("timing", cfg));
  dir.commit();
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feasplan: feasibility-aware diffusion trajectory planning"};
  app.require_subcommand(1);
  Options o;
  try {
    o.workers = hs::default_workers();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file")->check(CLI::ExistingFile);
    sub->add_option("--override", o.overrides, "section.key=value, repeatable");
    sub->add_option("--seed", o.seed, "run seed");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output path");
  };
  auto suite_opts = [&](CLI::App* sub) {
    sub->add_option("--split", o.split, "scene suite: train or eval");
    sub->add_option("--limit", o.limit, "use only the first N scenes");
  };

  auto* gen = app.add_subcommand("gen-scenes", "write a scene suite with experts");
  common(gen);
  suite_opts(gen);
  auto* train = app.add_subcommand("train", "train the denoiser by imitation");
  common(train);
  auto* grpo = app.add_subcommand("grpo", "fine-tune a checkpoint with GRPO");
  common(grpo);
  grpo->add_option("--checkpoint", o.checkpoint, "initial checkpoint")->required();
  auto* sample = app.add_subcommand("sample", "plan every scene of a suite");
  common(sample);
  suite_opts(sample);
  sample->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  auto* eval = app.add_subcommand("eval", "score plans against a suite");
  common(eval);
  suite_opts(eval);
  eval->add_option("--checkpoint", o.checkpoint, "model checkpoint");
  eval->add_flag("--experts", o.experts, "score the expert trajectories");
  auto* render = app.add_subcommand("render", "write SVG images of a suite");
  common(render);
  suite_opts(render);
  render->add_option("--checkpoint", o.checkpoint, "also draw the model's plans");
  auto* report = app.add_subcommand("report", "compare two eval reports");
  report->add_option("reports", o.reports, "two eval output directories")->expected(2)->required();
  report->add_option("--out", o.out, "output file; stdout when absent");
  auto* timing = app.add_subcommand("timing", "per-stage latency probe");
  common(timing);
  suite_opts(timing);
  timing->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) cmd_gen_scenes(o);
    else if (*train) cmd_train(o);
    else if (*grpo) cmd_grpo(o);
    else if (*sample) cmd_sample(o);
    else if (*eval) cmd_eval(o);
    else if (*render) cmd_render(o);
    else if (*report) cmd_report(o);
    else if (*timing) cmd_timing(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
