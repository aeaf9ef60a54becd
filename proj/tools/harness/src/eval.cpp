#include "feasplan/harness/eval.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/grpo/grpo.hpp"
#include "feasplan/scene/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace feasplan::harness {

namespace {

constexpr const char* kHeader =
    "scene,narrow,curvature_violation,drivable_violation,min_footprint_sdf,max_curvature_excess,"
    "progress,task_reward,ade,triggered_steps";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

bool keep(const EvalRow& r, Subset s) {
  switch (s) {
    case Subset::all: return true;
    case Subset::narrow: return r.narrow;
    case Subset::regular: return !r.narrow;
  }
  return true;
}

const char* subset_name(Subset s) {
  switch (s) {
    case Subset::all: return "all";
    case Subset::narrow: return "narrow";
    case Subset::regular: return "regular";
  }
  return "all";
}

}  // namespace

double average_displacement(const geometry::Trajectory& a, const geometry::Trajectory& b) {
  if (a.size() != b.size() || a.size() == 0) throw ShapeError("ade: trajectories differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::hypot(a.points[i].x - b.points[i].x, a.points[i].y - b.points[i].y);
  }
  return sum / static_cast<double>(a.size());
}

EvalRow score(const SceneCase& c, const geometry::Trajectory& plan, const RunConfig& cfg,
              int triggered_steps) {
  EvalRow r;
  r.scene = c.scene.seed;
  r.narrow = c.narrow;
  r.curvature_violation = geometry::curvature_violation(plan, cfg.curvature);
  r.min_footprint_sdf = scene::min_footprint_sdf(plan, c.grid, cfg.footprint);
  r.drivable_violation = r.min_footprint_sdf < 0.0;
  r.max_curvature_excess = geometry::max_curvature_excess(plan, cfg.curvature);
  r.progress = grpo::progress_ratio(plan, c.scene);
  r.task_reward = grpo::task_reward(plan, c.scene, c.grid, cfg.footprint, cfg.reward);
  r.ade = average_displacement(plan, c.expert);
  r.triggered_steps = triggered_steps;
  return r;
}

EvalSummary summarize(std::span<const EvalRow> rows, Subset subset) {
  EvalSummary s;
  for (const auto& r : rows) {
    if (!keep(r, subset)) continue;
    ++s.scenes;
    s.curvature_rate += r.curvature_violation ? 1.0 : 0.0;
    s.drivable_rate += r.drivable_violation ? 1.0 : 0.0;
    s.mean_min_sdf += r.min_footprint_sdf;
    s.mean_excess += r.max_curvature_excess;
    s.mean_progress += r.progress;
    s.mean_task += r.task_reward;
    s.mean_ade += r.ade;
  }
  if (s.scenes == 0) return s;
  const double n = static_cast<double>(s.scenes);
  s.curvature_rate /= n;
  s.drivable_rate /= n;
  s.mean_min_sdf /= n;
  s.mean_excess /= n;
  s.mean_progress /= n;
  s.mean_task /= n;
  s.mean_ade /= n;
  return s;
}

std::string rows_csv(std::span<const EvalRow> rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.scene) + ',' + (r.narrow ? "1" : "0") + ',' +
           (r.curvature_violation ? "1" : "0") + ',' + (r.drivable_violation ? "1" : "0") + ',' +
           format_number(r.min_footprint_sdf) + ',' + format_number(r.max_curvature_excess) + ',' +
           format_number(r.progress) + ',' + format_number(r.task_reward) + ',' +
           format_number(r.ade) + ',' + std::to_string(r.triggered_steps) + '\n';
  }
  return out;
}

std::vector<EvalRow> parse_rows_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kHeader) throw FormatError("report: bad header");
  std::vector<EvalRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10) throw FormatError("report: expected 10 columns, got '" + line + "'");
    EvalRow r;
    try {
      r.scene = std::stoull(f[0]);
      r.narrow = f[1] == "1";
      r.curvature_violation = f[2] == "1";
      r.drivable_violation = f[3] == "1";
      r.min_footprint_sdf = parse_number(f[4]);
      r.max_curvature_excess = parse_number(f[5]);
      r.progress = parse_number(f[6]);
      r.task_reward = parse_number(f[7]);
      r.ade = parse_number(f[8]);
      r.triggered_steps = std::stoi(f[9]);
    } catch (const std::logic_error&) {
      throw FormatError("report: malformed row '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

std::string summary_text(const EvalReport& report) {
  std::ostringstream os;
  char buf[256];
  os << "subset    scenes  curv_viol  drv_viol  min_sdf    progress  task    ade\n";
  for (Subset s : {Subset::all, Subset::regular, Subset::narrow}) {
    const EvalSummary m = summarize(report.rows, s);
    std::snprintf(buf, sizeof(buf), "%-9s %6zu  %8.4f%%  %7.4f%%  %8.4f  %8.4f  %6.4f  %6.4f\n",
                  subset_name(s), m.scenes, 100.0 * m.curvature_rate, 100.0 * m.drivable_rate,
                  m.mean_min_sdf, m.mean_progress, m.mean_task, m.mean_ade);
    os << buf;
  }
  return os.str();
}

void write_report(const fs::path& dir, const EvalReport& report) {
  write_file_atomic(dir / "report.csv", rows_csv(report.rows));
  write_file_atomic(dir / "summary.txt", summary_text(report));
  write_file_atomic(dir / "manifest.txt", manifest_text(report.manifest));
}

EvalReport read_report(const fs::path& dir) {
  EvalReport r;
  r.rows = parse_rows_csv(read_file(dir / "report.csv"));
  if (fs::exists(dir / "manifest.txt")) r.manifest = parse_manifest(read_file(dir / "manifest.txt"));
  return r;
}

std::string diff_reports(const EvalReport& a, const EvalReport& b) {
  std::string out = "subset,metric,a,b,delta\n";
  for (Subset s : {Subset::all, Subset::regular, Subset::narrow}) {
    const EvalSummary x = summarize(a.rows, s);
    const EvalSummary y = summarize(b.rows, s);
    const std::pair<const char*, std::pair<double, double>> metrics[] = {
        {"scenes", {static_cast<double>(x.scenes), static_cast<double>(y.scenes)}},
        {"curvature_violation_rate", {x.curvature_rate, y.curvature_rate}},
        {"drivable_violation_rate", {x.drivable_rate, y.drivable_rate}},
        {"mean_min_footprint_sdf", {x.mean_min_sdf, y.mean_min_sdf}},
        {"mean_max_curvature_excess", {x.mean_excess, y.mean_excess}},
        {"mean_progress", {x.mean_progress, y.mean_progress}},
        {"mean_task_reward", {x.mean_task, y.mean_task}},
        {"mean_ade", {x.mean_ade, y.mean_ade}},
    };
    for (const auto& [name, v] : metrics) {
      out += std::string(subset_name(s)) + ',' + name + ',' + format_number(v.first) + ',' +
             format_number(v.second) + ',' + format_number(v.second - v.first) + '\n';
    }
  }
  return out;
}

}  // namespace feasplan::harness
