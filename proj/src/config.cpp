#include "lft/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace lft {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view accepted) {
  throw ConfigError(std::string(key) + ": invalid value '" + std::string(value) +
                    "' (accepted: " + std::string(accepted) + ")");
}

double parse_double(std::string_view key, std::string_view text, std::string_view accepted) {
  const std::string s = trim(text);
  if (s.empty()) bad_value(key, text, accepted);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) bad_value(key, text, accepted);
  return v;
}

std::int64_t parse_int(std::string_view key, std::string_view text, std::string_view accepted) {
  const std::string s = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, text, accepted);
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// "a,b,c" or "start:stop:step" (inclusive, step > 0).
std::vector<double> parse_double_list(std::string_view key, std::string_view text) {
  const char* accepted = "comma-separated numbers or start:stop:step";
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) bad_value(key, text, accepted);
    const double a = parse_double(key, parts[0], accepted);
    const double b = parse_double(key, parts[1], accepted);
    const double step = parse_double(key, parts[2], accepted);
    if (!(step > 0.0) || b < a) bad_value(key, text, accepted);
    const auto n = static_cast<std::int64_t>(std::floor((b - a) / step + 1e-9));
    for (std::int64_t k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * step);
  } else {
    for (const auto& p : split(text, ',')) out.push_back(parse_double(key, p, accepted));
  }
  if (out.empty()) bad_value(key, text, accepted);
  return out;
}

struct Range {
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double v) const {
    return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  }
  std::string describe() const {
    if (lo == -kInf && hi == kInf) return "any number";
    if (hi == kInf) return std::string(lo_open ? "> " : ">= ") + fmt_short(lo);
    if (lo == -kInf) return std::string(hi_open ? "< " : "<= ") + fmt_short(hi);
    return std::string(lo_open ? "(" : "[") + fmt_short(lo) + ", " + fmt_short(hi) +
           (hi_open ? ")" : "]");
  }
};

const Range kAny{};
const Range kPositive{0.0, kInf, true, false};
const Range kNonNegative{0.0, kInf, false, false};
const Range kNegative{-kInf, 0.0, false, true};
const Range kUnit{0.0, 1.0, false, false};

struct Entry {
  std::string key;
  std::string accepted;
  std::function<void(SimConfig&, std::string_view)> set;
  std::function<std::string(const SimConfig&)> get;  // empty for keys outside the hash
};

using DoubleRef = double& (*)(SimConfig&);

Entry number(std::string key, DoubleRef ref, Range range) {
  Entry e;
  e.key = key;
  e.accepted = range.describe();
  e.set = [key, ref, range](SimConfig& c, std::string_view v) {
    const double x = parse_double(key, v, range.describe());
    if (!range.contains(x)) {
      throw ConfigError(key + ": value " + trim(v) + " out of range (accepted: " + range.describe() + ")");
    }
    ref(c) = x;
  };
  e.get = [ref](const SimConfig& c) { return fmt17(ref(const_cast<SimConfig&>(c))); };
  return e;
}

std::string_view to_string(FieldDirection d) {
  switch (d) {
    case FieldDirection::kRadial: return "radial";
    case FieldDirection::kScaled: return "scaled";
    case FieldDirection::kGradient: return "gradient";
  }
  return "gradient";
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> r;
    // Run
    r.push_back(number("dt", [](SimConfig& c) -> double& { return c.dt_s; }, kPositive));
    r.push_back(number("duration", [](SimConfig& c) -> double& { return c.duration_s; }, kNonNegative));
    r.push_back(number("road_length", [](SimConfig& c) -> double& { return c.road.length_m; }, kPositive));
    r.push_back(number("road_y_right", [](SimConfig& c) -> double& { return c.road.y_right; }, kAny));
    r.push_back(number("road_y_left", [](SimConfig& c) -> double& { return c.road.y_left; }, kAny));
    // Human drivers
    r.push_back(number("strip_width", [](SimConfig& c) -> double& { return c.params.hdv.strip_width_m; }, kPositive));
    r.push_back(number("lambda", [](SimConfig& c) -> double& { return c.params.hdv.lambda; }, kNonNegative));
    r.push_back(number("benefit_threshold", [](SimConfig& c) -> double& { return c.params.hdv.benefit_threshold; }, kPositive));
    r.push_back(number("hdv_decel_comfort", [](SimConfig& c) -> double& { return c.params.hdv.decel_comfort; }, kNegative));
    r.push_back(number("hdv_decel_critical", [](SimConfig& c) -> double& { return c.params.hdv.decel_critical; }, kNegative));
    r.push_back(number("hdv_accel_max", [](SimConfig& c) -> double& { return c.params.hdv.accel_max; }, kPositive));
    r.push_back(number("hdv_min_gap", [](SimConfig& c) -> double& { return c.params.hdv.min_gap; }, kNonNegative));
    r.push_back(number("hdv_front_range", [](SimConfig& c) -> double& { return c.params.hdv.front_range; }, kPositive));
    // CAV controller
    r.push_back(number("k_pl", [](SimConfig& c) -> double& { return c.params.cav.k_pl; }, kNonNegative));
    r.push_back(number("k_pl_v", [](SimConfig& c) -> double& { return c.params.cav.k_pl_v; }, kNonNegative));
    r.push_back(number("k_px", [](SimConfig& c) -> double& { return c.params.cav.k_px; }, kNonNegative));
    r.push_back(number("w_nudge", [](SimConfig& c) -> double& { return c.params.cav.w_nudge; }, kNonNegative));
    r.push_back(number("w_repulse", [](SimConfig& c) -> double& { return c.params.cav.w_repulse; }, kNonNegative));
    r.push_back(number("p1", [](SimConfig& c) -> double& { return c.params.cav.p1; }, kPositive));
    r.push_back(number("p2", [](SimConfig& c) -> double& { return c.params.cav.p2; }, kPositive));
    r.push_back(number("p3", [](SimConfig& c) -> double& { return c.params.cav.p3; }, kPositive));
    r.push_back(number("field_long_scale", [](SimConfig& c) -> double& { return c.params.cav.field_long_scale; }, kPositive));
    r.push_back(number("field_lat_scale", [](SimConfig& c) -> double& { return c.params.cav.field_lat_scale; }, kPositive));
    r.push_back(number("field_lat_margin", [](SimConfig& c) -> double& { return c.params.cav.field_lat_margin_m; }, kNonNegative));
    r.push_back(number("field_shift_gain", [](SimConfig& c) -> double& { return c.params.cav.field_shift_gain; }, kNonNegative));
    {
      Entry e;
      e.key = "field_direction";
      e.accepted = "radial, scaled, gradient";
      e.set = [](SimConfig& c, std::string_view v) {
        const std::string s = trim(v);
        if (s == "radial") c.params.cav.field_direction = FieldDirection::kRadial;
        else if (s == "scaled") c.params.cav.field_direction = FieldDirection::kScaled;
        else if (s == "gradient") c.params.cav.field_direction = FieldDirection::kGradient;
        else bad_value("field_direction", v, "radial, scaled, gradient");
      };
      e.get = [](const SimConfig& c) { return std::string(to_string(c.params.cav.field_direction)); };
      r.push_back(std::move(e));
    }
    r.push_back(number("k_b1", [](SimConfig& c) -> double& { return c.params.cav.k_b1; }, kNonNegative));
    r.push_back(number("k_b2", [](SimConfig& c) -> double& { return c.params.cav.k_b2; }, kNonNegative));
    r.push_back(number("b_pl", [](SimConfig& c) -> double& { return c.params.cav.b_pl; }, kNonNegative));
    r.push_back(number("cav_front_range", [](SimConfig& c) -> double& { return c.params.cav.front_range; }, kPositive));
    r.push_back(number("cav_back_range", [](SimConfig& c) -> double& { return c.params.cav.back_range; }, kPositive));
    r.push_back(number("ax_min", [](SimConfig& c) -> double& { return c.params.cav.ax_min; }, kAny));
    r.push_back(number("ax_max", [](SimConfig& c) -> double& { return c.params.cav.ax_max; }, kAny));
    r.push_back(number("ay_min", [](SimConfig& c) -> double& { return c.params.cav.ay_min; }, kAny));
    r.push_back(number("ay_max", [](SimConfig& c) -> double& { return c.params.cav.ay_max; }, kAny));
    r.push_back(number("jx_min", [](SimConfig& c) -> double& { return c.params.cav.jx_min; }, kAny));
    r.push_back(number("jx_max", [](SimConfig& c) -> double& { return c.params.cav.jx_max; }, kAny));
    r.push_back(number("jy_min", [](SimConfig& c) -> double& { return c.params.cav.jy_min; }, kAny));
    r.push_back(number("jy_max", [](SimConfig& c) -> double& { return c.params.cav.jy_max; }, kAny));
    r.push_back(number("accel_pref", [](SimConfig& c) -> double& { return c.params.cav.accel_pref; }, kPositive));
    r.push_back(number("cav_decel_comfort", [](SimConfig& c) -> double& { return c.params.cav.decel_comfort; }, kNegative));
    r.push_back(number("cav_min_gap", [](SimConfig& c) -> double& { return c.params.cav.min_gap; }, kNonNegative));
    r.push_back(number("cav_tau", [](SimConfig& c) -> double& { return c.params.cav.tau_s; }, kPositive));
    // Adaptive potential lines
    r.push_back(number("x_cm", [](SimConfig& c) -> double& { return c.params.apl.x_cm; }, kPositive));
    r.push_back(number("x_am", [](SimConfig& c) -> double& { return c.params.apl.x_am; }, kPositive));
    r.push_back(number("b_apl", [](SimConfig& c) -> double& { return c.params.apl.b_apl; }, kPositive));
    r.push_back(number("epsilon", [](SimConfig& c) -> double& { return c.params.apl.epsilon; }, kNonNegative));
    r.push_back(number("apl_window", [](SimConfig& c) -> double& { return c.params.apl.neighbor_window_m; }, kPositive));
    // Scenario generation
    r.push_back(number("v_des_min", [](SimConfig& c) -> double& { return c.init.v_des_min; }, kPositive));
    r.push_back(number("v_des_max", [](SimConfig& c) -> double& { return c.init.v_des_max; }, kPositive));
    r.push_back(number("hdv_tau_mean", [](SimConfig& c) -> double& { return c.init.hdv_tau_mean; }, kPositive));
    r.push_back(number("hdv_tau_sd", [](SimConfig& c) -> double& { return c.init.hdv_tau_sd; }, kNonNegative));
    r.push_back(number("hdv_tau_min", [](SimConfig& c) -> double& { return c.init.hdv_tau_min; }, kPositive));
    r.push_back(number("hdv_tau_max", [](SimConfig& c) -> double& { return c.init.hdv_tau_max; }, kPositive));
    {
      Entry e;
      e.key = "max_placement_attempts";
      e.accepted = "integer >= 1";
      e.set = [](SimConfig& c, std::string_view v) {
        const auto n = parse_int("max_placement_attempts", v, "integer >= 1");
        if (n < 1) bad_value("max_placement_attempts", v, "integer >= 1");
        c.init.max_placement_attempts = n;
      };
      e.get = [](const SimConfig& c) { return std::to_string(c.init.max_placement_attempts); };
      r.push_back(std::move(e));
    }
    // Metrics
    r.push_back(number("warmup", [](SimConfig& c) -> double& { return c.metrics.warmup_s; }, kNonNegative));
    r.push_back(number("grid_dx", [](SimConfig& c) -> double& { return c.metrics.grid_dx_m; }, kPositive));
    r.push_back(number("grid_dt", [](SimConfig& c) -> double& { return c.metrics.grid_dt_s; }, kPositive));
    return r;
  }();
  return entries;
}

const Entry* find_entry(std::string_view key) {
  for (const auto& e : registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

}  // namespace

void SweepSpec::validate() const {
  if (densities.empty()) throw ConfigError("densities: list must not be empty");
  if (hdv_rates.empty()) throw ConfigError("hdv_rates: list must not be empty");
  if (controllers.empty()) throw ConfigError("controllers: list must not be empty");
  if (seeds.empty()) throw ConfigError("seeds: list must not be empty");
  for (double d : densities) {
    if (!(d >= 0.0)) throw ConfigError("density: value " + fmt_short(d) + " out of range (accepted: >= 0)");
  }
  for (double h : hdv_rates) {
    if (!kUnit.contains(h)) {
      throw ConfigError("hdv_rate: value " + fmt_short(h) + " out of range (accepted: [0, 1])");
    }
  }
  if (workers < 1) throw ConfigError("workers: out of range (accepted: integer >= 1)");
  if (traj_every < 0) throw ConfigError("traj_every: out of range (accepted: integer >= 0)");
  base.validate();
}

std::size_t SweepSpec::cell_count() const {
  return densities.size() * hdv_rates.size() * controllers.size() * seeds.size();
}

std::vector<SimConfig> SweepSpec::cells() const {
  std::vector<SimConfig> out;
  out.reserve(cell_count());
  for (ControllerKind ctl : controllers) {
    for (double d : densities) {
      for (double h : hdv_rates) {
        for (std::uint64_t s : seeds) {
          SimConfig c = base;
          c.controller = ctl;
          c.density_veh_km = d;
          c.hdv_rate = h;
          c.seed = s;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

void apply_setting(SweepSpec& spec, std::string_view key_in, std::string_view value) {
  const std::string key = trim(key_in);
  if (key == "density" || key == "densities") {
    spec.densities = parse_double_list("density", value);
    for (double d : spec.densities) {
      if (!(d >= 0.0)) {
        throw ConfigError("density: value " + fmt_short(d) + " out of range (accepted: >= 0)");
      }
    }
  } else if (key == "hdv_rate" || key == "hdv_rates") {
    spec.hdv_rates = parse_double_list("hdv_rate", value);
    for (double h : spec.hdv_rates) {
      if (!kUnit.contains(h)) {
        throw ConfigError("hdv_rate: value " + fmt_short(h) + " out of range (accepted: [0, 1])");
      }
    }
  } else if (key == "controller" || key == "controllers") {
    spec.controllers.clear();
    for (const auto& name : split(value, ',')) spec.controllers.push_back(parse_controller(name));
  } else if (key == "seed" || key == "seeds") {
    const char* accepted = "non-negative integers, comma-separated or start:stop";
    spec.seeds.clear();
    const std::string v = trim(value);
    if (v.find(':') != std::string::npos) {
      const auto parts = split(v, ':');
      if (parts.size() != 2) bad_value("seed", value, accepted);
      const auto a = parse_int("seed", parts[0], accepted);
      const auto b = parse_int("seed", parts[1], accepted);
      if (a < 0 || b < a) bad_value("seed", value, accepted);
      for (auto s = a; s <= b; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      for (const auto& p : split(v, ',')) {
        const auto s = parse_int("seed", p, accepted);
        if (s < 0) bad_value("seed", p, accepted);
        spec.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
  } else if (key == "workers") {
    const auto n = parse_int("workers", value, "integer >= 1");
    if (n < 1) bad_value("workers", value, "integer >= 1");
    spec.workers = static_cast<int>(n);
  } else if (key == "run_workers") {
    const auto n = parse_int("run_workers", value, "integer >= 1");
    if (n < 1) bad_value("run_workers", value, "integer >= 1");
    spec.base.workers = static_cast<int>(n);
  } else if (key == "traj_every") {
    const auto n = parse_int("traj_every", value, "integer >= 0");
    if (n < 0) bad_value("traj_every", value, "integer >= 0");
    spec.traj_every = static_cast<int>(n);
  } else if (key == "write_grid") {
    const auto n = parse_int("write_grid", value, "0 or 1");
    if (n != 0 && n != 1) bad_value("write_grid", value, "0 or 1");
    spec.write_grid = n == 1;
  } else if (key == "preset") {
    const std::string v = trim(value);
    if (v == "footnote") {
      spec.base.params.cav.w_nudge = 1.5;
      spec.base.params.cav.w_repulse = 1.0;
    } else if (v == "default") {
      spec.base.params.cav.w_nudge = CavParams{}.w_nudge;
      spec.base.params.cav.w_repulse = CavParams{}.w_repulse;
    } else {
      bad_value("preset", value, "default, footnote");
    }
  } else if (const Entry* e = find_entry(key)) {
    e->set(spec.base, value);
  } else {
    throw ConfigError(key + ": unknown key");
  }
}

void apply_config_text(SweepSpec& spec, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    try {
      apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& err) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
}

void apply_config_file(SweepSpec& spec, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(spec, ss.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out = {
      {"density", "list of numbers >= 0"},
      {"hdv_rate", "list of numbers in [0, 1]"},
      {"controller", "list of pl, cm, nscm, fam, svam"},
      {"seed", "list of integers >= 0"},
      {"workers", "integer >= 1 (parallel runs)"},
      {"run_workers", "integer >= 1 (threads inside one run)"},
      {"traj_every", "integer >= 0"},
      {"write_grid", "0 or 1"},
      {"preset", "default, footnote"},
  };
  for (const auto& e : registry()) out.emplace_back(e.key, e.accepted);
  return out;
}

std::string canonical_config(const SimConfig& config) {
  std::string out;
  out += "controller=" + std::string(to_string(config.controller)) + "\n";
  out += "density=" + fmt17(config.density_veh_km) + "\n";
  out += "hdv_rate=" + fmt17(config.hdv_rate) + "\n";
  out += "seed=" + std::to_string(config.seed) + "\n";
  for (const auto& e : registry()) out += e.key + "=" + e.get(config) + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const SimConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(config))));
  return buf;
}

std::string scenario_id(const SimConfig& config) {
  return std::string(to_string(config.controller)) + "_d" + fmt_short(config.density_veh_km) +
         "_h" + fmt_short(config.hdv_rate) + "_s" + std::to_string(config.seed);
}

}  // namespace lft
