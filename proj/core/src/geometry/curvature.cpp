#include "feasplan/geometry/curvature.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>

namespace feasplan::geometry {

namespace dc = diffcore;
using dc::Tensor;

void CurvatureConfig::validate() const {
  if (kernel.empty() || kernel.size() % 2 == 0) {
    throw InvalidArgument("curvature: kernel length must be odd");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    if (kernel[i] < 0.0) throw InvalidArgument("curvature: kernel weights must be nonnegative");
    if (std::abs(kernel[i] - kernel[kernel.size() - 1 - i]) > 1e-12) {
      throw InvalidArgument("curvature: kernel must be symmetric");
    }
    total += kernel[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("curvature: kernel must sum to 1");
  if (!(eps_len > 0.0 && eps_kappa > 0.0 && eps_v > 0.0)) {
    throw InvalidArgument("curvature: stabilizers must be positive");
  }
  if (!(kappa_geo > 0.0 && a_lat_max > 0.0)) {
    throw InvalidArgument("curvature: kappa_geo and a_lat_max must be positive");
  }
}

namespace {

Positions make_positions(Tape& tape, std::span<const Trajectory> trajs, bool leaf) {
  if (trajs.empty()) throw InvalidArgument("positions: empty trajectory batch");
  const auto h = static_cast<Eigen::Index>(trajs.front().size());
  Tensor xs(static_cast<Eigen::Index>(trajs.size()), h);
  Tensor ys(xs.rows(), h);
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    if (static_cast<Eigen::Index>(trajs[b].size()) != h) {
      throw ShapeError("positions: trajectories in a batch must share H");
    }
    for (Eigen::Index i = 0; i < h; ++i) {
      xs(static_cast<Eigen::Index>(b), i) = trajs[b].points[static_cast<std::size_t>(i)].x;
      ys(static_cast<Eigen::Index>(b), i) = trajs[b].points[static_cast<std::size_t>(i)].y;
    }
  }
  if (leaf) return {tape.leaf(std::move(xs)), tape.leaf(std::move(ys))};
  return {tape.constant(std::move(xs)), tape.constant(std::move(ys))};
}

// (H x H-1) forward-difference operator.
Tensor difference_matrix(Eigen::Index h) {
  Tensor d = Tensor::Zero(h, h - 1);
  for (Eigen::Index i = 0; i + 1 < h; ++i) {
    d(i, i) = -1.0;
    d(i + 1, i) = 1.0;
  }
  return d;
}

std::vector<double> row0(const Tensor& t) {
  std::vector<double> out(static_cast<std::size_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.cols(); ++i) out[static_cast<std::size_t>(i)] = t(0, i);
  return out;
}

}  // namespace

Positions constant_positions(Tape& tape, std::span<const Trajectory> trajs) {
  return make_positions(tape, trajs, false);
}

Positions leaf_positions(Tape& tape, std::span<const Trajectory> trajs) {
  return make_positions(tape, trajs, true);
}

Positions smooth_positions(Positions p, const CurvatureConfig& cfg) {
  const Eigen::Index h = p.x.cols();
  const auto k = static_cast<Eigen::Index>(cfg.kernel.size());
  if (k > h) {
    throw InvalidArgument("smooth_positions: kernel length " + std::to_string(k) +
                          " exceeds trajectory length " + std::to_string(h));
  }
  const Eigen::Index r = k / 2;
  // smoothed = positions * S, S(j, i) = weight of input j in output i.
  Tensor s = Tensor::Zero(h, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index m = -r; m <= r; ++m) {
      const Eigen::Index j = std::clamp<Eigen::Index>(i + m, 0, h - 1);
      s(j, i) += cfg.kernel[static_cast<std::size_t>(m + r)];
    }
  }
  Var sv = p.x.tape()->constant(std::move(s));
  return {dc::matmul(p.x, sv), dc::matmul(p.y, sv)};
}

ArcLengths arc_lengths(Positions p, double eps_len) {
  Tape& tape = *p.x.tape();
  const Eigen::Index h = p.x.cols();
  if (h < 2) throw InvalidArgument("arc_lengths: need at least 2 positions");
  Var d = tape.constant(difference_matrix(h));
  Var dx = dc::matmul(p.x, d);
  Var dy = dc::matmul(p.y, d);
  Var norm = dc::sqrt(dc::add(dc::square(dx), dc::square(dy)));
  Var floor = tape.constant(Tensor::Constant(norm.rows(), norm.cols(), eps_len));
  Var inc = dc::maximum(norm, floor);
  // cumulative(j) = sum_{i<j} inc(i)
  Tensor u = Tensor::Zero(h - 1, h);
  for (Eigen::Index i = 0; i + 1 < h; ++i) {
    for (Eigen::Index j = i + 1; j < h; ++j) u(i, j) = 1.0;
  }
  return {inc, dc::matmul(inc, tape.constant(std::move(u)))};
}

Var curvature_profile(Positions p, const CurvatureConfig& cfg) {
  Tape& tape = *p.x.tape();
  const Eigen::Index h = p.x.cols();
  const Eigen::Index batch = p.x.rows();
  if (h < 3) throw InvalidArgument("curvature_profile: need at least 3 positions");
  const ArcLengths arc = arc_lengths(p, cfg.eps_len);

  // Stencil triple (a, a+1, a+2) per point; derivative offset m = alpha*h1 + beta*h2
  // places the evaluation at the first, middle or last node of the triple.
  std::vector<Eigen::Index> ia(static_cast<std::size_t>(h));
  Tensor alpha(batch, h);
  Tensor beta(batch, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    Eigen::Index a = i - 1;
    double al = 1.0;
    double be = 0.0;
    if (i == 0) {
      a = 0;
      al = -1.0;
    } else if (i == h - 1) {
      a = h - 3;
      be = 2.0;
    }
    ia[static_cast<std::size_t>(i)] = a;
    alpha.col(i).setConstant(al);
    beta.col(i).setConstant(be);
  }
  std::vector<Eigen::Index> ib(ia.size());
  std::vector<Eigen::Index> ic(ia.size());
  for (std::size_t i = 0; i < ia.size(); ++i) {
    ib[i] = ia[i] + 1;
    ic[i] = ia[i] + 2;
  }

  Var h1 = dc::select_cols(arc.increments, ia);
  Var h2 = dc::select_cols(arc.increments, ib);
  Var inv_h1 = dc::reciprocal(h1);
  Var inv_h2 = dc::reciprocal(h2);
  Var inv_h12 = dc::reciprocal(dc::add(h1, h2));
  Var offset = dc::add(dc::mul(h1, tape.constant(std::move(alpha))),
                       dc::mul(h2, tape.constant(std::move(beta))));

  auto derivatives = [&](Var f) {
    Var fa = dc::select_cols(f, ia);
    Var fb = dc::select_cols(f, ib);
    Var fc = dc::select_cols(f, ic);
    Var d1 = dc::mul(dc::sub(fb, fa), inv_h1);
    Var d2 = dc::mul(dc::sub(fc, fb), inv_h2);
    Var dd = dc::mul(dc::sub(d2, d1), inv_h12);
    return std::pair{dc::add(d1, dc::mul(dd, offset)), dc::scale(dd, 2.0)};
  };
  auto [xp, xpp] = derivatives(p.x);
  auto [yp, ypp] = derivatives(p.y);
  Var num = dc::sub(dc::mul(xp, ypp), dc::mul(yp, xpp));
  Var speed2 = dc::add(dc::square(xp), dc::square(yp));
  return dc::mul(num, dc::reciprocal(dc::pow(speed2, 1.5), cfg.eps_kappa));
}

Var point_speeds(Positions raw, double dt) {
  Tape& tape = *raw.x.tape();
  const Eigen::Index h = raw.x.cols();
  if (h < 2) throw InvalidArgument("point_speeds: need at least 2 positions");
  if (!(dt > 0.0)) throw InvalidArgument("point_speeds: dt must be positive");
  Var d = tape.constant(difference_matrix(h));
  Var dx = dc::matmul(raw.x, d);
  Var dy = dc::matmul(raw.y, d);
  Var norm = dc::sqrt(dc::add(dc::square(dx), dc::square(dy)));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(h));
  for (Eigen::Index i = 0; i < h; ++i) idx[static_cast<std::size_t>(i)] = std::min(i, h - 2);
  return dc::scale(dc::select_cols(norm, idx), 1.0 / dt);
}

Var adaptive_bound(Var speeds, const CurvatureConfig& cfg) {
  Tape& tape = *speeds.tape();
  Var geo = tape.constant(Tensor::Constant(speeds.rows(), speeds.cols(), cfg.kappa_geo));
  Var dyn = dc::scale(dc::reciprocal(dc::square(speeds), cfg.eps_v), cfg.a_lat_max);
  return dc::minimum(geo, dyn);
}

Var curvature_excess(Positions raw, double dt, const CurvatureConfig& cfg) {
  Var kappa = curvature_profile(smooth_positions(raw, cfg), cfg);
  Var bound = adaptive_bound(point_speeds(raw, dt), cfg);
  return dc::sub(dc::abs(kappa), bound);
}

Var curvature_loss(Positions raw, double dt, const CurvatureConfig& cfg) {
  return dc::mean(dc::square(dc::hinge(curvature_excess(raw, dt, cfg))));
}

double adaptive_bound(double speed, const CurvatureConfig& cfg) {
  if (speed < 0.0) throw InvalidArgument("adaptive_bound: speed must be nonnegative");
  return std::min(cfg.kappa_geo, cfg.a_lat_max / (speed * speed + cfg.eps_v));
}

std::vector<double> point_speeds(const Trajectory& traj) {
  validate(traj, 2);
  Tape tape;
  return row0(point_speeds(constant_positions(tape, std::span(&traj, 1)), traj.dt).value());
}

std::vector<double> curvature_profile(const Trajectory& traj, const CurvatureConfig& cfg,
                                      bool smooth) {
  validate(traj, 3);
  Tape tape;
  Positions p = constant_positions(tape, std::span(&traj, 1));
  if (smooth) p = smooth_positions(p, cfg);
  return row0(curvature_profile(p, cfg).value());
}

std::vector<double> curvature_excess(const Trajectory& traj, const CurvatureConfig& cfg) {
  validate(traj, 3);
  Tape tape;
  return row0(
      curvature_excess(constant_positions(tape, std::span(&traj, 1)), traj.dt, cfg).value());
}

double curvature_loss(const Trajectory& traj, const CurvatureConfig& cfg) {
  validate(traj, 3);
  Tape tape;
  return curvature_loss(constant_positions(tape, std::span(&traj, 1)), traj.dt, cfg).scalar();
}

double max_curvature_excess(const Trajectory& traj, const CurvatureConfig& cfg) {
  const auto excess = curvature_excess(traj, cfg);
  return *std::max_element(excess.begin(), excess.end());
}

bool curvature_violation(const Trajectory& traj, const CurvatureConfig& cfg) {
  return max_curvature_excess(traj, cfg) > 0.0;
}

double violation_rate(std::span<const Trajectory> trajs, const CurvatureConfig& cfg) {
  if (trajs.empty()) throw InvalidArgument("violation_rate: empty trajectory set");
  std::size_t count = 0;
  for (const Trajectory& t : trajs) count += curvature_violation(t, cfg) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(trajs.size());
}

SpeedBandViolation band_violation(const Trajectory& traj, const CurvatureConfig& cfg,
                                  double split_speed) {
  const auto excess = curvature_excess(traj, cfg);
  const auto speeds = point_speeds(traj);
  SpeedBandViolation out;
  for (std::size_t i = 0; i < excess.size(); ++i) {
    const bool low = speeds[i] < split_speed;
    (low ? out.has_low : out.has_high) = true;
    if (excess[i] > 0.0) (low ? out.low : out.high) = true;
  }
  return out;
}

}  // namespace feasplan::geometry
