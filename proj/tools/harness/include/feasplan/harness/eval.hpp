#pragma once

#include "feasplan/harness/config.hpp"
#include "feasplan/harness/dataset.hpp"
#include "feasplan/harness/io.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace feasplan::harness {

struct EvalRow {
  std::uint64_t scene = 0;
  bool narrow = false;
  bool curvature_violation = false;
  bool drivable_violation = false;
  double min_footprint_sdf = 0.0;  // m
  double max_curvature_excess = 0.0;
  double progress = 0.0;
  double task_reward = 0.0;
  double ade = 0.0;  // mean waypoint distance to the expert, m
  int triggered_steps = 0;

  bool operator==(const EvalRow&) const = default;
};

struct EvalSummary {
  std::size_t scenes = 0;
  double curvature_rate = 0.0;
  double drivable_rate = 0.0;
  double mean_min_sdf = 0.0;
  double mean_excess = 0.0;
  double mean_progress = 0.0;
  double mean_task = 0.0;
  double mean_ade = 0.0;
};

double average_displacement(const geometry::Trajectory& a, const geometry::Trajectory& b);

EvalRow score(const SceneCase& c, const geometry::Trajectory& plan, const RunConfig& cfg,
              int triggered_steps = 0);

enum class Subset { all, narrow, regular };
EvalSummary summarize(std::span<const EvalRow> rows, Subset subset = Subset::all);

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted by scene
  Manifest manifest;
};

std::string rows_csv(std::span<const EvalRow> rows);
std::vector<EvalRow> parse_rows_csv(std::string_view text);
std::string summary_text(const EvalReport& report);

// Writes report.csv, summary.txt and manifest.txt into dir.
void write_report(const fs::path& dir, const EvalReport& report);
EvalReport read_report(const fs::path& dir);

// Ablation table: subset, metric, a, b, b - a.
std::string diff_reports(const EvalReport& a, const EvalReport& b);

}  // namespace feasplan::harness
