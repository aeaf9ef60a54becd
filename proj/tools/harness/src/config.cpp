#include "feasplan/harness/config.hpp"

#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace feasplan::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("not a number: '" + s + "'");
  return v;
}

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw FormatError("not a boolean: '" + s + "'");
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  return out;
}

struct Field {
  std::string key;  // section.name
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define FP_DOUBLE(key, expr)                                                         \
  Field {                                                                            \
    key, [](const RunConfig& c) { return format_double(c.expr); },                   \
        [](RunConfig& c, const std::string& v) { c.expr = parse_double(v); }         \
  }
#define FP_INT(key, expr, type)                                                      \
  Field {                                                                            \
    key, [](const RunConfig& c) { return std::to_string(c.expr); },                  \
        [](RunConfig& c, const std::string& v) { c.expr = parse_integer<type>(v); }  \
  }
#define FP_BOOL(key, expr)                                                           \
  Field {                                                                            \
    key, [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); },  \
        [](RunConfig& c, const std::string& v) { c.expr = parse_bool(v); }           \
  }
#define FP_LIST(key, expr)                                                           \
  Field {                                                                            \
    key, [](const RunConfig& c) { return format_list(c.expr); },                     \
        [](RunConfig& c, const std::string& v) { c.expr = parse_list(v); }           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FP_INT("run.seed", seed, std::uint64_t),

      FP_INT("scene.min_segments", scene.min_segments, int),
      FP_INT("scene.max_segments", scene.max_segments, int),
      FP_INT("scene.min_turns", scene.min_turns, int),
      FP_DOUBLE("scene.min_width", scene.min_width),
      FP_DOUBLE("scene.max_width", scene.max_width),
      FP_DOUBLE("scene.min_turn_radius", scene.min_turn_radius),
      FP_DOUBLE("scene.max_turn_radius", scene.max_turn_radius),
      FP_DOUBLE("scene.min_turn_angle", scene.min_turn_angle),
      FP_DOUBLE("scene.max_turn_angle", scene.max_turn_angle),
      FP_DOUBLE("scene.max_heading", scene.max_heading),
      FP_DOUBLE("scene.min_straight", scene.min_straight),
      FP_DOUBLE("scene.max_straight", scene.max_straight),
      FP_DOUBLE("scene.min_speed", scene.min_speed),
      FP_DOUBLE("scene.max_speed", scene.max_speed),
      FP_DOUBLE("scene.lateral_usage", scene.lateral_usage),
      FP_DOUBLE("scene.jitter_fraction", scene.jitter_fraction),
      FP_DOUBLE("scene.lead_in", scene.lead_in),
      FP_DOUBLE("scene.tail", scene.tail),
      FP_DOUBLE("scene.margin", scene.margin),
      FP_DOUBLE("scene.min_clearance", scene.min_clearance),
      FP_INT("scene.horizon", scene.horizon, std::size_t),
      FP_DOUBLE("scene.dt", scene.dt),

      FP_LIST("geometry.kernel", curvature.kernel),
      FP_DOUBLE("geometry.eps_len", curvature.eps_len),
      FP_DOUBLE("geometry.eps_kappa", curvature.eps_kappa),
      FP_DOUBLE("geometry.eps_v", curvature.eps_v),
      FP_DOUBLE("geometry.kappa_geo", curvature.kappa_geo),
      FP_DOUBLE("geometry.a_lat_max", curvature.a_lat_max),
      FP_DOUBLE("geometry.footprint_length", footprint.length),
      FP_DOUBLE("geometry.footprint_width", footprint.width),
      FP_DOUBLE("geometry.footprint_offset", footprint.center_offset),

      FP_INT("schedule.steps", schedule.steps, int),
      Field{"schedule.kind",
            [](const RunConfig& c) { return std::string(diffusion::schedule_name(c.schedule.kind)); },
            [](RunConfig& c, const std::string& v) { c.schedule.kind = diffusion::parse_schedule(v); }},

      Field{"model.mode", [](const RunConfig& c) { return std::string(denoiser::mode_name(c.model.mode)); },
            [](RunConfig& c, const std::string& v) { c.model.mode = denoiser::parse_mode(v); }},
      FP_INT("model.hidden_layers", model.hidden_layers, int),
      FP_INT("model.width", model.width, int),
      FP_INT("model.time_dim", model.time_dim, int),

      FP_INT("data.train_scenes", data.train_scenes, std::size_t),
      FP_INT("data.train_narrow", data.train_narrow, std::size_t),
      FP_INT("data.train_seed_base", data.train_seed_base, std::uint64_t),
      FP_INT("data.eval_scenes", data.eval_scenes, std::size_t),
      FP_INT("data.eval_narrow", data.eval_narrow, std::size_t),
      FP_INT("data.eval_seed_base", data.eval_seed_base, std::uint64_t),
      FP_DOUBLE("data.cell", data.cell),

      FP_DOUBLE("train.lambda_cur", train.lambda_cur),
      FP_INT("train.batch_size", train.batch_size, int),
      FP_INT("train.steps", train.steps, int),
      FP_DOUBLE("train.learning_rate", train.learning_rate),
      FP_DOUBLE("train.final_lr_fraction", train.final_lr_fraction),
      FP_DOUBLE("train.clip_norm", train.clip_norm),
      FP_DOUBLE("train.lambda_warmup", train.lambda_warmup),

      FP_BOOL("guidance.enabled", guidance.enabled),
      FP_INT("guidance.steps_per_t", guidance.steps_per_t, int),
      FP_DOUBLE("guidance.eta", guidance.eta),
      FP_LIST("guidance.eta_schedule", guidance.eta_schedule),
      FP_DOUBLE("guidance.heading_scale", guidance.heading_scale),
      FP_DOUBLE("guidance.m_safe", guidance.guard.m_safe),
      FP_DOUBLE("guidance.trigger_margin", guidance.guard.trigger_margin),

      FP_INT("grpo.group_size", grpo.group_size, int),
      FP_LIST("grpo.step_weights", grpo.step_weights),
      FP_DOUBLE("grpo.eps_r", grpo.eps_r),
      FP_DOUBLE("grpo.lambda_bc", grpo.lambda_bc),
      FP_INT("grpo.reference_chains", grpo.reference_chains, int),
      FP_DOUBLE("grpo.learning_rate", grpo.learning_rate),
      FP_DOUBLE("grpo.clip_norm", grpo.clip_norm),
      FP_INT("grpo.iterations", grpo.iterations, int),
      FP_DOUBLE("grpo.lambda_fea", reward.lambda_fea),
      FP_DOUBLE("grpo.progress_weight", reward.progress_weight),
      FP_DOUBLE("grpo.a_long_max", reward.a_long_max),
      FP_DOUBLE("grpo.feasible_reward", reward.feasible_reward),
      FP_DOUBLE("grpo.infeasible_reward", reward.infeasible_reward),

      Field{"eval.sampler",
            [](const RunConfig& c) {
              return std::string(c.eval.sampler == diffusion::SamplerKind::deterministic ? "deterministic"
                                                                                         : "stochastic");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "deterministic") {
                c.eval.sampler = diffusion::SamplerKind::deterministic;
              } else if (v == "stochastic") {
                c.eval.sampler = diffusion::SamplerKind::stochastic;
              } else {
                throw FormatError("unknown sampler '" + v + "'");
              }
            }},
      FP_INT("eval.sample_seed", eval.sample_seed, std::uint64_t),
  };
  return table;
}

#undef FP_DOUBLE
#undef FP_INT
#undef FP_BOOL
#undef FP_LIST

const Field& find_field(const std::string& key) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const auto& f : fields()) m.emplace(f.key, &f);
    return m;
  }();
  const auto it = index.find(key);
  if (it == index.end()) throw InvalidArgument("unknown config key '" + key + "'");
  return *it->second;
}

void assign(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Field& f = find_field(key);
  try {
    f.set(cfg, value);
  } catch (const Error& e) {
    throw InvalidArgument("config key '" + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  scene::validate(scene, curvature, footprint);
  if (schedule.steps < 2) throw InvalidArgument("schedule.steps must be >= 2");
  if (model.hidden_layers < 1 || model.width < 1) throw InvalidArgument("model depth and width must be >= 1");
  if (model.time_dim < 2 || model.time_dim % 2 != 0) throw InvalidArgument("model.time_dim must be even");
  if (data.eval_narrow > data.eval_scenes) throw InvalidArgument("data.eval_narrow exceeds data.eval_scenes");
  if (data.train_narrow > data.train_scenes) throw InvalidArgument("data.train_narrow exceeds data.train_scenes");
  if (!(data.cell > 0.0)) throw InvalidArgument("data.cell must be > 0");
  train.validate();
  guidance.validate();
  grpo.validate();
  reward.validate();
  if (!guidance.eta_schedule.empty() &&
      guidance.eta_schedule.size() != static_cast<std::size_t>(schedule.steps)) {
    throw InvalidArgument("guidance.eta_schedule must have schedule.steps entries");
  }
  (void)grpo.weights(schedule.steps);
}

denoiser::NetworkShape RunConfig::network_shape() const {
  denoiser::NetworkShape s;
  s.horizon = scene.horizon;
  s.condition_dim = 3 + denoiser::ProbeLattice{}.size();
  s.time_dim = model.time_dim;
  s.hidden_layers = model.hidden_layers;
  s.width = model.width;
  return s;
}

diffusion::NoiseSchedule RunConfig::make_schedule() const {
  return diffusion::make_schedule(schedule.steps, schedule.kind);
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw FormatError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (section.empty()) throw FormatError("config line " + std::to_string(lineno) + ": key outside a section");
    assign(cfg, section + "." + key, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw InvalidArgument("override '" + std::string(assignment) + "' is not key=value");
  }
  assign(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(to_text(cfg)); }

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

}  // namespace feasplan::harness
