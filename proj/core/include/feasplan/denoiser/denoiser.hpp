#pragma once

#include "feasplan/diffcore/tape.hpp"
#include "feasplan/geometry/trajectory.hpp"
#include "feasplan/scene/polygon.hpp"
#include "feasplan/scene/sdf.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feasplan::denoiser {

using diffcore::Tensor;

enum class Mode { predict_x0, predict_eps };

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view name);

// Network-space scaling of trajectory coordinates.
inline constexpr double kPositionScale = 30.0;  // m
inline constexpr double kSpeedScale = 10.0;     // m/s
inline constexpr double kSdfScale = 5.0;        // m

struct ProbeLattice {
  int along = 7;
  int across = 5;
  double ahead = 28.0;    // m, x from 0 to ahead
  double lateral = 12.0;  // m, y from -lateral/2 to lateral/2
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(along) * static_cast<std::size_t>(across);
  }
  // Row-major over (along, across).
  [[nodiscard]] std::vector<scene::Vec2> points() const;
};

struct Condition {
  double ego_speed = 0.0;  // m/s
  scene::Vec2 goal;        // ego frame, m
  std::vector<double> probe_sdf;
};

Condition make_condition(const scene::SdfGrid& grid, double ego_speed, scene::Vec2 goal,
                         const ProbeLattice& lattice = {});
// [speed / 10, goal / 30, probes / 5] as a single row.
Tensor encode_condition(const Condition& c);

struct TimeEmbedding {
  int dim = 32;
  void validate() const;
  // Row of [sin(t f_k), cos(t f_k)] with f_k = 10000^(-2k/dim).
  [[nodiscard]] Tensor operator()(int t) const;
  [[nodiscard]] Tensor batch(std::span<const int> ts) const;
};

// Interleaved (x, y, theta) per waypoint, positions / 30 and headings / pi.
Tensor normalize(const geometry::Trajectory& traj);
// Inverse of normalize. Headings are wrapped only when wrap is set.
geometry::Trajectory denormalize(const Tensor& row, double dt, bool wrap = true);

struct NetworkShape {
  std::size_t horizon = 8;
  std::size_t condition_dim = 38;
  int time_dim = 32;
  int hidden_layers = 4;
  int width = 256;
  [[nodiscard]] std::size_t state_dim() const { return 3 * horizon; }
  [[nodiscard]] std::size_t input_dim() const {
    return state_dim() + static_cast<std::size_t>(time_dim) + condition_dim;
  }
};

struct DenoiserParams {
  Mode mode = Mode::predict_x0;
  std::size_t horizon = 8;
  TimeEmbedding time;
  std::vector<Tensor> weights;  // fan_in x fan_out
  std::vector<Tensor> biases;   // 1 x fan_out

  [[nodiscard]] std::size_t state_dim() const { return 3 * horizon; }
  [[nodiscard]] std::size_t condition_dim() const;
  [[nodiscard]] std::size_t parameter_count() const;
  // Weights then biases per layer, in layer order.
  [[nodiscard]] std::vector<Tensor> flat() const;
  void assign(std::span<const Tensor> flat);
  void validate() const;
  [[nodiscard]] std::uint64_t hash() const;
};

// Glorot-uniform weights, zero biases; deterministic in seed.
DenoiserParams init_params(const NetworkShape& shape, Mode mode, std::uint64_t seed);

// Forward pass without a tape. x_t is (B x 3H), cond is (B x C), one t per row.
Tensor predict(const DenoiserParams& params, const Tensor& x_t, std::span<const int> t,
               const Tensor& cond);

// Parameter handles on a tape, aligned with DenoiserParams::flat().
struct BoundParams {
  std::vector<diffcore::Var> weights;
  std::vector<diffcore::Var> biases;
  [[nodiscard]] std::vector<diffcore::Var> flat() const;
};
BoundParams bind(diffcore::Tape& tape, const DenoiserParams& params, bool trainable);
diffcore::Var predict(const DenoiserParams& params, const BoundParams& bound, diffcore::Var x_t,
                      std::span<const int> t, const Tensor& cond);

// x0 = (x_t - sqrt(1 - abar) eps) / sqrt(abar) and its inverse.
Tensor eps_to_x0(const Tensor& x_t, const Tensor& eps, double alpha_bar);
Tensor x0_to_eps(const Tensor& x_t, const Tensor& x0, double alpha_bar);

struct CheckpointMeta {
  std::uint64_t schedule_hash = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};
struct Checkpoint {
  DenoiserParams params;
  CheckpointMeta meta;
};

void write_checkpoint(std::ostream& os, const DenoiserParams& params, const CheckpointMeta& meta);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const DenoiserParams& params,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace feasplan::denoiser
