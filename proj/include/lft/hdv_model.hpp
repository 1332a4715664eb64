#pragma once

#include <optional>
#include <vector>

#include "lft/core.hpp"

namespace lft {

/// Bounds used when turning a safe velocity into an acceleration.
struct FollowingLimits {
  double decel_comfort = -1.5;
  double accel_max = 1.5;
  double min_gap = 2.0;
  /// Harder braking used when the comfortable rate cannot close the speed
  /// difference within the available gap. Unset for CAVs.
  std::optional<double> decel_critical;
};

struct HdvParams {
  double strip_width_m = 0.05;
  double lambda = 0.1;
  double benefit_threshold = 10.0;
  double decel_comfort = -1.5;
  double decel_critical = -2.6;
  double accel_max = 1.5;
  double min_gap = 2.0;
  double front_range = 100.0;

  void validate() const;
  FollowingLimits following() const { return {decel_comfort, accel_max, min_gap, decel_critical}; }
};

struct DriverMemory {
  double acc_benefit_left = 0.0;
  double acc_benefit_right = 0.0;
};

enum class LateralDecision { kStay, kLeft, kRight };

/// Inclusive strip index interval, strip 0 starting at the right road edge.
struct StripRange {
  int lo = 0;
  int hi = -1;

  bool intersects(const StripRange& o) const { return lo <= o.hi && o.lo <= hi; }
  StripRange shifted(int d) const { return {lo + d, hi + d}; }
  friend bool operator==(const StripRange&, const StripRange&) = default;
};

StripRange occupied_strips(const Vehicle& veh, const HdvParams& params, const RoadGeometry& road);

/// Nearest vehicle ahead (bumper gap below `front_range`) sharing a strip.
std::optional<Neighbor> find_leader_strips(std::size_t subject, Fleet fleet,
                                           const NeighborIndex& index, const HdvParams& params,
                                           const RoadGeometry& road);

/// Gipps-style safe speed behind a leader; 0 when the radicand is negative.
/// `decel` is used by magnitude.
double safe_velocity(double v_leader, double gap_m, double decel, double min_gap, double tau_s);

/// Two-sided clamp of (v_safe - v)/dt between the braking and acceleration
/// abilities, switching to the critical rate when the braking distance
/// (v_safe - v)^2 / (2|decel_comfort|) exceeds gap - min_gap.
double safe_acceleration(double v_current, double v_safe, double gap_m,
                         const FollowingLimits& limits, double dt);

double strip_change_benefit(double v_safe_dest, double v_safe_cur, double v_des, int n_strips,
                            double lambda);

/// Strip leader for every lateral offset the subject can reach while staying
/// on the road. Offsets count strips, positive to the left.
struct OffsetLeaders {
  int min_offset = 0;  // <= 0, rightmost reachable
  int max_offset = 0;  // >= 0, leftmost reachable
  std::vector<std::optional<Neighbor>> leaders;

  const std::optional<Neighbor>& at(int offset) const {
    return leaders[static_cast<std::size_t>(offset - min_offset)];
  }
};

OffsetLeaders leaders_by_offset(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                const HdvParams& params, const RoadGeometry& road);

/// Safe velocity the subject would have behind `leader`, capped at v_des.
double hdv_safe_velocity(const Vehicle& subject, const std::optional<Neighbor>& leader, Fleet fleet,
                         const HdvParams& params);

struct MemoryUpdate {
  DriverMemory memory;       // after the decision (reset when moving)
  DriverMemory accumulated;  // before any reset
  LateralDecision decision = LateralDecision::kStay;
};

/// Accumulator rule: a side with a positive per-step sum adds it, otherwise
/// its memory is halved; crossing the threshold picks the larger side (ties
/// go right) and resets both.
MemoryUpdate accumulate_memory(const DriverMemory& memory, double left_sum, double right_sum,
                               double threshold);

MemoryUpdate update_lateral_memory(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                   const DriverMemory& memory, const HdvParams& params,
                                   const RoadGeometry& road);

/// True when moving the subject one strip to `side` overlaps nobody and the
/// new strip follower can adapt within one step of comfortable braking.
bool strip_move_feasible(std::size_t subject, LateralDecision side, Fleet fleet,
                         const NeighborIndex& index, const HdvParams& params,
                         const RoadGeometry& road, double dt);

struct HdvAction {
  double ax = 0.0;
  /// Lateral speed held for the whole step: +-strip_width/dt or 0.
  double vy = 0.0;
  DriverMemory memory;
  LateralDecision decision = LateralDecision::kStay;
  std::optional<Neighbor> leader;
};

HdvAction hdv_step(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                   const DriverMemory& memory, const HdvParams& params, const RoadGeometry& road,
                   double dt);

}  // namespace lft
