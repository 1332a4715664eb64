#include "lft/pl_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lft {

namespace {

double power(double base, double exponent) {
  if (exponent == 2.0) return base * base;
  if (exponent == 6.0) {
    const double b2 = base * base;
    return b2 * b2 * b2;
  }
  return std::pow(base, exponent);
}

}  // namespace

void CavParams::validate() const {
  for (double g : {k_pl, k_pl_v, k_px, w_nudge, w_repulse, k_b1, k_b2}) {
    if (!(g >= 0.0)) throw ConfigError("cav gains and weights must be >= 0");
  }
  if (!(ax_min < ax_max) || !(ay_min < ay_max) || !(jx_min < jx_max) || !(jy_min < jy_max)) {
    throw ConfigError("cav acceleration/jerk limits must satisfy min < max");
  }
  if (!(p1 > 0.0 && p2 > 0.0 && p3 > 0.0)) throw ConfigError("field exponents must be > 0");
  if (!(field_long_scale > 0.0) || !(field_lat_scale > 0.0) || !(field_lat_margin_m >= 0.0) ||
      !(field_shift_gain >= 0.0)) {
    throw ConfigError("field geometry parameters must be positive");
  }
  if (!(b_pl >= 0.0)) throw ConfigError("b_pl: must be >= 0");
  if (!(tau_s > 0.0)) throw ConfigError("cav_tau: must be > 0");
  if (!(decel_comfort < 0.0) || !(accel_pref > 0.0)) {
    throw ConfigError("cav decel_comfort must be < 0 and accel_pref > 0");
  }
}

FleetSpeedRange speed_range(Fleet fleet) {
  if (fleet.empty()) return {};
  FleetSpeedRange r{fleet.front().spec.v_des, fleet.front().spec.v_des};
  for (const auto& v : fleet) {
    r.v_min = std::min(r.v_min, v.spec.v_des);
    r.v_max = std::max(r.v_max, v.spec.v_des);
  }
  return r;
}

double assign_pl(double v_des, const FleetSpeedRange& range, const RoadGeometry& road,
                 const CavParams& params) {
  if (range.v_max <= range.v_min) return 0.5 * (road.y_left + road.y_right);
  return road.y_right + params.b_pl +
         (v_des - range.v_min) * (road.y_left - road.y_right - 2.0 * params.b_pl) /
             (range.v_max - range.v_min);
}

double pl_force(double y_pl, double y, double vy, const CavParams& params) {
  return params.k_pl * (y_pl - y) - params.k_pl_v * vy;
}

double cruise_force(double vx, double v_des, const CavParams& params, double dt) {
  const double target = std::min(vx + params.accel_pref * dt, v_des);
  return params.k_px * (target - vx);
}

double field_magnitude(double dx, double dy, double sd1, double sd2, const CavParams& params) {
  const double u = power(std::abs(dx) / (0.5 * sd1), params.p1) +
                   power(std::abs(dy) / (0.5 * sd2), params.p2);
  return 1.0 / (power(u, params.p3) + 1.0);
}

FieldForce potential_force(const Vehicle& subject, const Vehicle& other, bool other_is_ahead,
                           const CavParams& params, const RoadGeometry& road) {
  const double L = road.length_m;
  const double vi = subject.state.vx;
  double dx = 0.0;
  if (other_is_ahead) {
    const double d = forward_distance(subject.state.x, other.state.x, L);
    const double shift = params.field_shift_gain * params.tau_s * std::max(0.0, vi - other.state.vx);
    dx = -d + shift;
  } else {
    dx = forward_distance(other.state.x, subject.state.x, L);
  }
  const double dy = subject.state.y - other.state.y;
  const double sd1 = params.field_long_scale *
                     (0.5 * (subject.spec.length_m + other.spec.length_m) + params.min_gap +
                      params.tau_s * vi);
  const double sd2 = params.field_lat_scale * 0.5 * (subject.spec.width_m + other.spec.width_m) +
                     params.field_lat_margin_m;

  FieldForce f;
  f.magnitude = field_magnitude(dx, dy, sd1, sd2, params);

  const double a = 0.5 * sd1;
  const double b = 0.5 * sd2;
  double nx = dx;
  double ny = dy;
  if (params.field_direction == FieldDirection::kScaled) {
    nx = dx / a;
    ny = dy / b;
  } else if (params.field_direction == FieldDirection::kGradient) {
    nx = std::copysign(params.p1 * power(std::abs(dx) / a, params.p1 - 1.0) / a, dx);
    ny = std::copysign(params.p2 * power(std::abs(dy) / b, params.p2 - 1.0) / b, dy);
  }
  const double norm = std::hypot(nx, ny);
  if (norm > 0.0 && (dx != 0.0 || dy != 0.0)) {
    f.fx = f.magnitude * nx / norm;
    f.fy = f.magnitude * ny / norm;
  } else {
    f.fx = other_is_ahead ? -f.magnitude : f.magnitude;
  }
  return f;
}

ForceSum accumulate_forces(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                           const CavParams& params, const RoadGeometry& road) {
  const Vehicle& me = fleet[subject];
  ForceSum front;
  for (const Neighbor& nb : index.ahead(subject)) {
    if (nb.gap_m >= params.front_range) continue;
    const FieldForce f = potential_force(me, fleet[nb.index], true, params, road);
    front.fx += f.fx;
    front.fy += f.fy;
  }
  ForceSum back;
  for (const Neighbor& nb : index.behind(subject)) {
    if (nb.gap_m >= params.back_range) continue;
    const FieldForce f = potential_force(me, fleet[nb.index], false, params, road);
    back.fx += f.fx;
    back.fy += f.fy;
  }
  return {params.w_nudge * front.fx + params.w_repulse * back.fx,
          params.w_nudge * front.fy + params.w_repulse * back.fy};
}

AccelBounds boundary_limit(double y, double vy, double width, const RoadGeometry& road,
                           const CavParams& params) {
  const double y_hi = road.y_left - 0.5 * width;
  const double y_lo = road.y_right + 0.5 * width;
  return {params.k_b1 * (y_lo - y) - params.k_b2 * vy, params.k_b1 * (y_hi - y) - params.k_b2 * vy};
}

std::optional<Neighbor> cav_leader(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                   const CavParams& params) {
  const Vehicle& me = fleet[subject];
  for (const Neighbor& nb : index.ahead(subject)) {
    if (nb.gap_m >= params.front_range) continue;
    if (lateral_overlap(me, fleet[nb.index])) return nb;
  }
  return std::nullopt;
}

double cav_safe_velocity(const Vehicle& subject, const Neighbor& leader, Fleet fleet,
                         const CavParams& params) {
  (void)subject;
  return safe_velocity(fleet[leader.index].state.vx, leader.gap_m, params.decel_comfort,
                       params.min_gap, params.tau_s);
}

double limit_longitudinal(double ax_raw, std::optional<double> a_safe, double prev_ax,
                          const CavParams& params, double dt) {
  double ax = a_safe ? std::min(ax_raw, *a_safe) : ax_raw;
  ax = std::clamp(ax, params.ax_min, params.ax_max);
  return std::clamp(ax, prev_ax + params.jx_min * dt, prev_ax + params.jx_max * dt);
}

double limit_lateral(double ay_raw, const AccelBounds& bounds, double prev_ay,
                     const CavParams& params, double dt) {
  double ay = std::clamp(ay_raw, bounds.lower, std::max(bounds.lower, bounds.upper));
  ay = std::clamp(ay, params.ay_min, params.ay_max);
  return std::clamp(ay, prev_ay + params.jy_min * dt, prev_ay + params.jy_max * dt);
}

CavAction cav_step(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                   double y_pl_effective, const CavParams& params, const RoadGeometry& road,
                   double dt) {
  const Vehicle& me = fleet[subject];
  const ForceSum forces = accumulate_forces(subject, fleet, index, params, road);

  CavAction action;
  action.leader = cav_leader(subject, fleet, index, params);
  std::optional<double> a_safe;
  if (action.leader) {
    const double v_safe = cav_safe_velocity(me, *action.leader, fleet, params);
    a_safe = safe_acceleration(me.state.vx, v_safe, action.leader->gap_m, params.following(), dt);
  }

  const double ax_raw = cruise_force(me.state.vx, me.spec.v_des, params, dt) + forces.fx;
  const double ay_raw = forces.fy + pl_force(y_pl_effective, me.state.y, me.state.vy, params);

  action.accel.ax = limit_longitudinal(ax_raw, a_safe, me.state.ax, params, dt);
  action.accel.ay = limit_lateral(
      ay_raw, boundary_limit(me.state.y, me.state.vy, me.spec.width_m, road, params), me.state.ay,
      params, dt);
  return action;
}

}  // namespace lft
