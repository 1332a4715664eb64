#include "lft/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "lft/rng.hpp"

namespace lft {

namespace {

constexpr double kBoundaryTolerance = 0.01;
constexpr double kLimitSlack = 1e-12;
constexpr double kJerkSlack = 1e-9;

std::string range_error(const char* key, const char* accepted) {
  return std::string(key) + ": out of range (accepted: " + accepted + ")";
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw ConfigError(range_error("dt", "> 0"));
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw ConfigError(range_error("duration", ">= 0"));
  }
  if (!(density_veh_km >= 0.0) || !std::isfinite(density_veh_km)) {
    throw ConfigError(range_error("density", ">= 0"));
  }
  if (!(hdv_rate >= 0.0 && hdv_rate <= 1.0)) throw ConfigError(range_error("hdv_rate", "[0, 1]"));
  if (workers < 1) throw ConfigError(range_error("workers", ">= 1"));
  if (!(init.v_des_min > 0.0 && init.v_des_min <= init.v_des_max)) {
    throw ConfigError(range_error("v_des_min/v_des_max", "0 < min <= max"));
  }
  if (!(init.hdv_tau_min > 0.0 && init.hdv_tau_min <= init.hdv_tau_max) ||
      !(init.hdv_tau_sd >= 0.0)) {
    throw ConfigError(range_error("hdv_tau bounds", "0 < min <= max, sd >= 0"));
  }
  if (!(metrics.warmup_s >= 0.0)) throw ConfigError(range_error("warmup", ">= 0"));
  if (!(metrics.grid_dx_m > 0.0) || !(metrics.grid_dt_s > 0.0)) {
    throw ConfigError(range_error("grid_dx/grid_dt", "> 0"));
  }
  road.validate();
  params.hdv.validate();
  params.cav.validate();
  params.apl.validate();
}

std::int64_t SimConfig::step_count() const {
  return static_cast<std::int64_t>(std::llround(duration_s / dt_s));
}

std::size_t vehicle_count(double density_veh_km, const RoadGeometry& road) {
  return static_cast<std::size_t>(std::llround(density_veh_km * road.length_m / 1000.0));
}

std::size_t hdv_count(double hdv_rate, std::size_t vehicles) {
  // The small bias keeps products such as 0.01 * 50 on the half they denote.
  const double exact = hdv_rate * static_cast<double>(vehicles);
  return std::min(vehicles, static_cast<std::size_t>(std::llround(exact + 1e-9)));
}

World init_scenario(const SimConfig& config) {
  const RoadGeometry& road = config.road;
  const InitParams& ip = config.init;
  const std::size_t n = vehicle_count(config.density_veh_km, road);

  World world;
  world.road = road;
  world.vehicles.resize(n);
  world.memories.assign(n, DriverMemory{});
  if (n == 0) return world;

  RngStream rng(config.seed);

  std::vector<int> types(n);
  for (std::size_t k = 0; k < n; ++k) types[k] = static_cast<int>(k % 5);
  rng.shuffle(std::span<int>(types));

  double footprint = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    Vehicle& v = world.vehicles[k];
    v.spec.id = static_cast<int>(k);
    v.spec.length_m = kVehicleTypes[types[k]][0];
    v.spec.width_m = kVehicleTypes[types[k]][1];
    footprint += v.spec.length_m * v.spec.width_m;
  }
  if (footprint > road.length_m * road.width()) {
    throw InitError("density " + std::to_string(config.density_veh_km) +
                    " veh/km: vehicle footprint exceeds the road area");
  }

  std::int64_t attempts = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Vehicle& v = world.vehicles[k];
    const double half_w = 0.5 * v.spec.width_m;
    while (true) {
      if (++attempts > ip.max_placement_attempts) {
        throw InitError("placement failed after " + std::to_string(ip.max_placement_attempts) +
                        " attempts (" + std::to_string(k) + " of " + std::to_string(n) +
                        " vehicles placed)");
      }
      v.state.x = rng.uniform(0.0, road.length_m);
      v.state.y = rng.uniform(road.y_right + half_w, road.y_left - half_w);
      bool clear = true;
      for (std::size_t j = 0; j < k && clear; ++j) {
        clear = !bodies_overlap(v, world.vehicles[j], road);
      }
      if (clear) break;
    }
  }

  for (auto& v : world.vehicles) v.spec.v_des = rng.uniform(ip.v_des_min, ip.v_des_max);

  for (auto& v : world.vehicles) {
    double tau = rng.normal(ip.hdv_tau_mean, ip.hdv_tau_sd);
    while (tau < ip.hdv_tau_min || tau > ip.hdv_tau_max) {
      tau = rng.normal(ip.hdv_tau_mean, ip.hdv_tau_sd);
    }
    v.spec.tau_s = tau;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_hdv = hdv_count(config.hdv_rate, n);
  for (auto& v : world.vehicles) v.spec.cls = VehicleClass::kCav;
  for (std::size_t k = 0; k < n_hdv; ++k) world.vehicles[order[k]].spec.cls = VehicleClass::kHdv;
  for (auto& v : world.vehicles) {
    if (v.is_cav()) v.spec.tau_s = config.params.cav.tau_s;
    v.spec.validate(road);
  }

  world.range = speed_range(world.fleet());
  return world;
}

VehicleState integrate(const VehicleState& s, double ax, double ay, double dt,
                       const RoadGeometry& road) {
  VehicleState out = s;
  double vx = s.vx + dt * ax;
  if (vx < 0.0) {
    ax = -s.vx / dt;
    vx = 0.0;
  }
  out.x = wrap_position(s.x + dt * s.vx + 0.5 * dt * dt * ax, road.length_m);
  out.y = s.y + dt * s.vy + 0.5 * dt * dt * ay;
  out.vx = vx;
  out.vy = s.vy + dt * ay;
  out.ax = ax;
  out.ay = ay;
  return out;
}

Simulation::Simulation(const SimConfig& config) : Simulation(config, init_scenario(config)) {}

Simulation::Simulation(const SimConfig& config, World world)
    : config_(config), world_(std::move(world)), strategy_(apl_strategy(config.controller)) {
  config_.validate();
  if (strategy_) config_.params.apl.strategy = *strategy_;
  const std::size_t n = world_.vehicles.size();
  y_pl_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_pl_[i] = assign_pl(world_.vehicles[i].spec.v_des, world_.range, world_.road,
                         config_.params.cav);
  }
  hdv_vy_.assign(n, 0.0);
  crossed_.assign(n, 0);
  outside_.assign(n, 0);
  next_memories_ = world_.memories;
  report_.commands.resize(n);
  report_.leaders.resize(n);
  report_.ttc.resize(n);
  prev_accel_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev_accel_[i] = {world_.vehicles[i].state.ax, world_.vehicles[i].state.ay};
  }
  rebuild_index();
}

void Simulation::rebuild_index() {
  const ModelParams& p = config_.params;
  const double front = std::max(p.hdv.front_range, p.cav.front_range);
  const double back = std::max({p.cav.back_range, p.apl.x_am, p.apl.neighbor_window_m});
  index_.rebuild(world_.fleet(), world_.road, front, back);
}

void Simulation::for_each_chunk(const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t n = world_.vehicles.size();
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.workers), std::max<std::size_t>(n / 16, 1));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = std::min(n, w * chunk);
    const std::size_t e = std::min(n, b + chunk);
    threads.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min(n, chunk));
  for (auto& t : threads) t.join();
}

void Simulation::compute_commands(std::size_t begin, std::size_t end) {
  const Fleet fleet = world_.fleet();
  const ModelParams& p = config_.params;
  for (std::size_t i = begin; i < end; ++i) {
    if (fleet[i].is_hdv()) {
      const HdvAction a =
          hdv_step(i, fleet, index_, world_.memories[i], p.hdv, world_.road, config_.dt_s);
      report_.commands[i] = {a.ax, 0.0};
      report_.leaders[i] = a.leader;
      hdv_vy_[i] = a.vy;
      next_memories_[i] = a.memory;
    } else {
      const CavAction a = cav_step(i, fleet, index_, y_pl_[i], p.cav, world_.road, config_.dt_s);
      report_.commands[i] = a.accel;
      report_.leaders[i] = a.leader;
    }
    const auto& leader = report_.leaders[i];
    report_.ttc[i] = leader ? ttc(leader->gap_m, fleet[i].state.vx, fleet[leader->index].state.vx)
                            : std::nullopt;
  }
}

const StepReport& Simulation::step() {
  const Fleet fleet = world_.fleet();
  const double dt = config_.dt_s;

  // Phase 1: everything reads snapshot k only.
  if (strategy_) {
    y_pl_ = apl_step(fleet, index_, world_.road, world_.range, config_.params.apl,
                     config_.params.cav);
  }
  for_each_chunk([this](std::size_t b, std::size_t e) { compute_commands(b, e); });

  // Phase 2.
  report_.crossings = 0;
  for_each_chunk([this, dt](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Vehicle& v = world_.vehicles[i];
      const double x0 = v.state.x;
      if (v.is_hdv()) v.state.vy = hdv_vy_[i];
      v.state = integrate(v.state, report_.commands[i].ax, report_.commands[i].ay, dt, world_.road);
      crossed_[i] = v.state.x < x0;
    }
  });
  for (char c : crossed_) report_.crossings += c;
  std::swap(world_.memories, next_memories_);
  next_memories_ = world_.memories;
  ++world_.step_index;

  rebuild_index();
  audit();
  return report_;
}

void Simulation::audit() {
  const Fleet fleet = world_.fleet();
  const CavParams& c = config_.params.cav;
  const double dt = config_.dt_s;
  report_.collisions = 0;
  report_.boundary_violations = 0;
  // An event is the onset of a condition: a pair starting to overlap, a
  // vehicle starting to stick out of the road.
  std::swap(overlaps_, prev_overlaps_);
  overlaps_.clear();
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    for (const Neighbor& nb : index_.ahead(i)) {
      if (nb.gap_m >= 0.0) break;
      if (bodies_overlap(fleet[i], fleet[nb.index], world_.road)) {
        overlaps_.emplace_back(std::min(i, nb.index), std::max(i, nb.index));
      }
    }
    const bool outside = boundary_excess(fleet[i], world_.road) > kBoundaryTolerance;
    if (outside && !outside_[i]) ++report_.boundary_violations;
    outside_[i] = outside;

    if (!fleet[i].is_cav()) continue;
    // Limits apply to what the controller asked for; the standstill floor may
    // replace a braking command afterwards.
    const Accel& cmd = report_.commands[i];
    const Accel& prev = prev_accel_[i];
    if (cmd.ax < c.ax_min - kLimitSlack || cmd.ax > c.ax_max + kLimitSlack ||
        cmd.ay < c.ay_min - kLimitSlack || cmd.ay > c.ay_max + kLimitSlack) {
      ++audit_.accel;
    }
    const double jx = (cmd.ax - prev.ax) / dt;
    const double jy = (cmd.ay - prev.ay) / dt;
    if (jx < c.jx_min - kJerkSlack || jx > c.jx_max + kJerkSlack || jy < c.jy_min - kJerkSlack ||
        jy > c.jy_max + kJerkSlack) {
      ++audit_.jerk;
    }
    if (fleet[i].state.ax != cmd.ax) ++audit_.standstill;
  }
  std::sort(overlaps_.begin(), overlaps_.end());
  overlaps_.erase(std::unique(overlaps_.begin(), overlaps_.end()), overlaps_.end());
  for (const auto& pair : overlaps_) {
    if (!std::binary_search(prev_overlaps_.begin(), prev_overlaps_.end(), pair)) ++report_.collisions;
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    prev_accel_[i] = {fleet[i].state.ax, fleet[i].state.ay};
  }
}

RunResult run(const SimConfig& config, const RunOptions& options) {
  Simulation sim(config);
  const World& world = sim.world();
  const double dt = config.dt_s;

  MetricsFrame metrics(world.road, world.vehicles.size(), dt, config.metrics);
  metrics.set_run_duration(config.duration_s);

  RunResult result;
  result.vehicles = world.vehicles.size();
  result.hdvs = static_cast<std::size_t>(
      std::count_if(world.vehicles.begin(), world.vehicles.end(), [](const Vehicle& v) { return v.is_hdv(); }));

  if (options.on_sample) options.on_sample(world, 0.0);
  const int every = std::max(1, options.sample_every);
  const std::int64_t steps = config.step_count();
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t_k = sim.time();
    const StepReport& report = sim.step();
    metrics.record_ttc(t_k, report.ttc);
    metrics.record_state(sim.time(), world.fleet(), report.crossings, report.collisions,
                         report.boundary_violations);
    if (options.on_step) options.on_step(world, report);
    if (options.on_sample && world.step_index % every == 0) options.on_sample(world, sim.time());
  }

  const double density = static_cast<double>(result.vehicles) / (world.road.length_m / 1000.0);
  result.summary = metrics.summary(density);
  result.grid = metrics.grid();
  result.cav_comfort = metrics.comfort(VehicleClass::kCav);
  result.hdv_comfort = metrics.comfort(VehicleClass::kHdv);
  result.limits = sim.limit_audit();
  return result;
}

}  // namespace lft
