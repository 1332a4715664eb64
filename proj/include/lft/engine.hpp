#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lft/apl_controller.hpp"
#include "lft/core.hpp"
#include "lft/hdv_model.hpp"
#include "lft/metrics.hpp"
#include "lft/pl_controller.hpp"

namespace lft {

struct ModelParams {
  HdvParams hdv;
  CavParams cav;
  AplParams apl;
};

/// (length, width) of the five vehicle types, drawn in equal proportion.
inline constexpr double kVehicleTypes[5][2] = {
    {3.2, 1.6}, {3.4, 1.7}, {3.9, 1.7}, {4.55, 1.82}, {5.2, 1.88}};

struct InitParams {
  double v_des_min = 25.0;
  double v_des_max = 35.0;
  double hdv_tau_mean = 1.5;
  double hdv_tau_sd = 0.5;
  double hdv_tau_min = 0.5;
  double hdv_tau_max = 3.0;
  std::int64_t max_placement_attempts = 1000000;
};

struct SimConfig {
  double dt_s = 0.25;
  double duration_s = 3600.0;
  double density_veh_km = 200.0;
  double hdv_rate = 0.0;
  std::uint64_t seed = 1;
  ControllerKind controller = ControllerKind::kPl;
  RoadGeometry road;
  ModelParams params;
  InitParams init;
  MetricsParams metrics;
  /// Threads used for the per-vehicle phases of one run. Results do not depend on it.
  int workers = 1;

  void validate() const;
  std::int64_t step_count() const;
};

struct World {
  RoadGeometry road;
  std::vector<Vehicle> vehicles;
  std::vector<DriverMemory> memories;  // one slot per vehicle, used by HDVs only
  FleetSpeedRange range;
  std::int64_t step_index = 0;

  Fleet fleet() const { return vehicles; }
  double time(double dt) const { return static_cast<double>(step_index) * dt; }
};

/// Number of vehicles for a density on the given ring.
std::size_t vehicle_count(double density_veh_km, const RoadGeometry& road);

/// HDV count for a penetration rate, rounding halves away from zero.
std::size_t hdv_count(double hdv_rate, std::size_t vehicles);

World init_scenario(const SimConfig& config);

/// Applies one step of the double integrator. A longitudinal speed that would
/// turn negative stops at zero and the stored ax becomes the one that stops it.
VehicleState integrate(const VehicleState& s, double ax, double ay, double dt,
                       const RoadGeometry& road);

/// What happened during one step.
struct StepReport {
  std::vector<Accel> commands;                // accelerations requested in phase 1
  std::vector<std::optional<Neighbor>> leaders;  // class-appropriate leader at snapshot k
  std::vector<std::optional<double>> ttc;        // against that leader, at snapshot k
  int crossings = 0;            // passes of x = 0
  int collisions = 0;           // pairs that started to overlap
  int boundary_violations = 0;  // vehicles that started to stick out by more than 0.01 m
};

/// Counts of CAV commands breaking the acceleration or jerk limits, and of
/// commands replaced by the standstill floor.
struct LimitAudit {
  std::int64_t accel = 0;
  std::int64_t jerk = 0;
  std::int64_t standstill = 0;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config);
  Simulation(const SimConfig& config, World world);

  /// Advances the world by one step and returns the per-step report.
  const StepReport& step();

  const World& world() const { return world_; }
  const SimConfig& config() const { return config_; }
  const LimitAudit& limit_audit() const { return audit_; }
  double time() const { return world_.time(config_.dt_s); }

 private:
  void rebuild_index();
  void compute_commands(std::size_t begin, std::size_t end);
  void for_each_chunk(const std::function<void(std::size_t, std::size_t)>& fn);
  void audit();

  SimConfig config_;
  World world_;
  std::optional<AplStrategy> strategy_;
  NeighborIndex index_;
  std::vector<double> y_pl_;
  std::vector<double> hdv_vy_;
  std::vector<DriverMemory> next_memories_;
  std::vector<Accel> prev_accel_;
  std::vector<char> crossed_;
  std::vector<std::pair<std::size_t, std::size_t>> overlaps_, prev_overlaps_;
  std::vector<char> outside_;
  StepReport report_;
  LimitAudit audit_;
};

struct RunOptions {
  /// Called with the initial world and then after every `sample_every`-th step.
  std::function<void(const World&, double t_s)> on_sample;
  int sample_every = 4;
  /// Called after every step with the fresh world and its report.
  std::function<void(const World&, const StepReport&)> on_step;
};

struct RunResult {
  MetricsSummary summary;
  SpaceTimeGrid grid;
  ComfortStats cav_comfort;
  ComfortStats hdv_comfort;
  LimitAudit limits;
  std::size_t vehicles = 0;
  std::size_t hdvs = 0;
};

RunResult run(const SimConfig& config, const RunOptions& options = {});

}  // namespace lft
