#include "lft/hdv_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lft {

namespace {

constexpr double kStripEps = 1e-9;

// exp(-lambda * n) for n = 0..size-1, cached per thread.
const std::vector<double>& decay_table(double lambda, std::size_t size) {
  thread_local double cached_lambda = std::numeric_limits<double>::quiet_NaN();
  thread_local std::vector<double> table;
  if (cached_lambda != lambda || table.size() < size) {
    cached_lambda = lambda;
    table.resize(std::max(size, table.size()));
    for (std::size_t n = 0; n < table.size(); ++n) {
      table[n] = std::exp(-lambda * static_cast<double>(n));
    }
  }
  return table;
}

}  // namespace

void HdvParams::validate() const {
  if (!(strip_width_m > 0.0)) throw ConfigError("strip_width: must be > 0");
  if (!(decel_critical < decel_comfort && decel_comfort < 0.0 && 0.0 < accel_max)) {
    throw ConfigError("hdv decelerations/acceleration: need decel_critical < decel_comfort < 0 < accel_max");
  }
  if (!(benefit_threshold > 0.0)) throw ConfigError("benefit_threshold: must be > 0");
  if (!(min_gap >= 0.0)) throw ConfigError("min_gap: must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda: must be >= 0");
  if (!(front_range > 0.0)) throw ConfigError("front_range: must be > 0");
}

StripRange occupied_strips(const Vehicle& veh, const HdvParams& params, const RoadGeometry& road) {
  const double lo = (veh.right_edge() - road.y_right) / params.strip_width_m;
  const double hi = (veh.left_edge() - road.y_right) / params.strip_width_m;
  // Edges lying on a strip boundary do not claim the neighbouring strip.
  return {static_cast<int>(std::floor(lo + kStripEps)),
          static_cast<int>(std::ceil(hi - kStripEps)) - 1};
}

OffsetLeaders leaders_by_offset(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                const HdvParams& params, const RoadGeometry& road) {
  const Vehicle& me = fleet[subject];
  const double ds = params.strip_width_m;
  OffsetLeaders out;
  out.max_offset = std::max(
      0, static_cast<int>(std::floor((road.y_left - me.left_edge()) / ds + kStripEps)));
  out.min_offset = -std::max(
      0, static_cast<int>(std::floor((me.right_edge() - road.y_right) / ds + kStripEps)));
  const int size = out.max_offset - out.min_offset + 1;
  out.leaders.assign(static_cast<std::size_t>(size), std::nullopt);

  // next_free[k]: smallest unassigned slot >= k (path-compressed).
  thread_local std::vector<int> next_free;
  next_free.resize(static_cast<std::size_t>(size) + 1);
  for (int k = 0; k <= size; ++k) next_free[static_cast<std::size_t>(k)] = k;
  auto find = [&](int k) {
    int root = k;
    while (next_free[static_cast<std::size_t>(root)] != root) root = next_free[static_cast<std::size_t>(root)];
    while (next_free[static_cast<std::size_t>(k)] != root) {
      const int nxt = next_free[static_cast<std::size_t>(k)];
      next_free[static_cast<std::size_t>(k)] = root;
      k = nxt;
    }
    return root;
  };

  const StripRange mine = occupied_strips(me, params, road);
  int remaining = size;
  for (const Neighbor& nb : index.ahead(subject)) {
    if (nb.gap_m >= params.front_range) continue;
    const StripRange theirs = occupied_strips(fleet[nb.index], params, road);
    const int dlo = std::max(out.min_offset, theirs.lo - mine.hi);
    const int dhi = std::min(out.max_offset, theirs.hi - mine.lo);
    if (dlo > dhi) continue;
    const int end = dhi - out.min_offset;
    for (int k = find(dlo - out.min_offset); k <= end; k = find(k + 1)) {
      out.leaders[static_cast<std::size_t>(k)] = nb;
      next_free[static_cast<std::size_t>(k)] = k + 1;
      --remaining;
    }
    if (remaining == 0) break;
  }
  return out;
}

std::optional<Neighbor> find_leader_strips(std::size_t subject, Fleet fleet,
                                           const NeighborIndex& index, const HdvParams& params,
                                           const RoadGeometry& road) {
  const StripRange mine = occupied_strips(fleet[subject], params, road);
  for (const Neighbor& nb : index.ahead(subject)) {
    if (nb.gap_m >= params.front_range) continue;
    if (occupied_strips(fleet[nb.index], params, road).intersects(mine)) return nb;
  }
  return std::nullopt;
}

double safe_velocity(double v_leader, double gap_m, double decel, double min_gap, double tau_s) {
  const double a = std::abs(decel);
  const double ta = tau_s * a;
  const double radicand = ta * ta + v_leader * v_leader + 2.0 * a * (gap_m - min_gap);
  if (radicand < 0.0) return 0.0;
  return std::max(0.0, -ta + std::sqrt(radicand));
}

double safe_acceleration(double v_current, double v_safe, double gap_m,
                         const FollowingLimits& limits, double dt) {
  const double v_diff = v_safe - v_current;
  double lower = limits.decel_comfort;
  if (limits.decel_critical && v_diff < 0.0) {
    const double braking_distance = v_diff * v_diff / (2.0 * std::abs(limits.decel_comfort));
    if (braking_distance > gap_m - limits.min_gap) lower = *limits.decel_critical;
  }
  return std::clamp(v_diff / dt, lower, limits.accel_max);
}

double strip_change_benefit(double v_safe_dest, double v_safe_cur, double v_des, int n_strips,
                            double lambda) {
  return (v_safe_dest - v_safe_cur) / v_des * std::exp(-lambda * n_strips);
}

double hdv_safe_velocity(const Vehicle& subject, const std::optional<Neighbor>& leader, Fleet fleet,
                         const HdvParams& params) {
  if (!leader) return subject.spec.v_des;
  const double v = safe_velocity(fleet[leader->index].state.vx, leader->gap_m, params.decel_comfort,
                                 params.min_gap, subject.spec.tau_s);
  return std::min(v, subject.spec.v_des);
}

MemoryUpdate accumulate_memory(const DriverMemory& memory, double left_sum, double right_sum,
                               double threshold) {
  MemoryUpdate out;
  DriverMemory& acc = out.accumulated;
  acc.acc_benefit_left =
      left_sum > 0.0 ? memory.acc_benefit_left + left_sum : 0.5 * memory.acc_benefit_left;
  acc.acc_benefit_right =
      right_sum > 0.0 ? memory.acc_benefit_right + right_sum : 0.5 * memory.acc_benefit_right;
  out.memory = acc;
  if (std::max(acc.acc_benefit_left, acc.acc_benefit_right) > threshold) {
    out.decision = acc.acc_benefit_left > acc.acc_benefit_right ? LateralDecision::kLeft
                                                                : LateralDecision::kRight;
    out.memory = DriverMemory{};
  }
  return out;
}

MemoryUpdate update_lateral_memory(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                   const DriverMemory& memory, const HdvParams& params,
                                   const RoadGeometry& road) {
  const Vehicle& me = fleet[subject];
  const OffsetLeaders leaders = leaders_by_offset(subject, fleet, index, params, road);
  const double v_cur = hdv_safe_velocity(me, leaders.at(0), fleet, params);
  const std::size_t reach =
      static_cast<std::size_t>(std::max(leaders.max_offset, -leaders.min_offset)) + 1;
  const std::vector<double>& decay = decay_table(params.lambda, reach);

  auto side_sum = [&](int step, int last) {
    double sum = 0.0;
    std::size_t memo_index = static_cast<std::size_t>(-1);
    double memo_v = me.spec.v_des;
    for (int d = step; step > 0 ? d <= last : d >= last; d += step) {
      const auto& leader = leaders.at(d);
      double v = me.spec.v_des;
      if (leader) {
        if (leader->index != memo_index) {
          memo_index = leader->index;
          memo_v = hdv_safe_velocity(me, leader, fleet, params);
        }
        v = memo_v;
      }
      sum += (v - v_cur) / me.spec.v_des * decay[static_cast<std::size_t>(std::abs(d))];
    }
    return sum;
  };

  const double left = side_sum(+1, leaders.max_offset);
  const double right = side_sum(-1, leaders.min_offset);
  return accumulate_memory(memory, left, right, params.benefit_threshold);
}

bool strip_move_feasible(std::size_t subject, LateralDecision side, Fleet fleet,
                         const NeighborIndex& index, const HdvParams& params,
                         const RoadGeometry& road, double dt) {
  if (side == LateralDecision::kStay) return true;
  Vehicle moved = fleet[subject];
  moved.state.y += side == LateralDecision::kLeft ? params.strip_width_m : -params.strip_width_m;
  if (moved.right_edge() < road.y_right - kStripEps || moved.left_edge() > road.y_left + kStripEps) {
    return false;
  }
  for (const Neighbor& nb : index.ahead(subject)) {
    if (nb.gap_m >= 0.0) break;
    if (bodies_overlap(moved, fleet[nb.index], road)) return false;
  }
  const StripRange strips = occupied_strips(moved, params, road);
  for (const Neighbor& nb : index.behind(subject)) {
    const Vehicle& other = fleet[nb.index];
    if (nb.gap_m < 0.0) {
      if (bodies_overlap(moved, other, road)) return false;
      continue;
    }
    if (!occupied_strips(other, params, road).intersects(strips)) continue;
    // Nearest strip follower at the destination must not need more than one
    // step of comfortable braking.
    const double v_safe = safe_velocity(moved.state.vx, nb.gap_m, params.decel_comfort,
                                        params.min_gap, other.spec.tau_s);
    return v_safe >= other.state.vx + params.decel_comfort * dt;
  }
  return true;
}

HdvAction hdv_step(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                   const DriverMemory& memory, const HdvParams& params, const RoadGeometry& road,
                   double dt) {
  const Vehicle& me = fleet[subject];
  HdvAction action;
  action.leader = find_leader_strips(subject, fleet, index, params, road);
  const double v_safe = hdv_safe_velocity(me, action.leader, fleet, params);
  const double gap = action.leader ? action.leader->gap_m : std::numeric_limits<double>::infinity();
  action.ax = safe_acceleration(me.state.vx, v_safe, gap, params.following(), dt);

  const MemoryUpdate update = update_lateral_memory(subject, fleet, index, memory, params, road);
  action.memory = update.memory;
  action.decision = update.decision;
  if (action.decision != LateralDecision::kStay &&
      !strip_move_feasible(subject, action.decision, fleet, index, params, road, dt)) {
    action.decision = LateralDecision::kStay;
    action.memory = update.accumulated;
  }
  if (action.decision == LateralDecision::kLeft) action.vy = params.strip_width_m / dt;
  if (action.decision == LateralDecision::kRight) action.vy = -params.strip_width_m / dt;
  return action;
}

}  // namespace lft
