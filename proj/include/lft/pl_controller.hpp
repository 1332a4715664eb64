#pragma once

#include <optional>

#include "lft/core.hpp"
#include "lft/hdv_model.hpp"

namespace lft {

/// Direction of the field force on the subject, always pointing away from
/// the ellipse center.
enum class FieldDirection {
  kRadial,    // along (dx, dy)
  kScaled,    // along (dx / a, dy / b), a and b the half-axes
  kGradient,  // outward normal of the level set through the subject
};

struct CavParams {
  double k_pl = 0.02;
  double k_pl_v = 0.65;
  double k_px = 1.0;
  double w_nudge = 1.0;    // weight of the sum over vehicles ahead
  double w_repulse = 0.5;  // weight of the sum over vehicles behind
  double p1 = 2.0;
  double p2 = 2.0;
  double p3 = 6.0;
  // Ellipse geometry around a neighbour j, seen by subject i:
  //   sd1 = long_scale * ((L_i + L_j)/2 + min_gap + tau * vx_i)
  //   sd2 = lat_scale * (W_i + W_j)/2 + lat_margin
  //   center shifted back by shift_gain * tau * max(0, vx_i - vx_j) when j is ahead.
  double field_long_scale = 1.5;
  double field_lat_scale = 2.5;
  double field_lat_margin_m = 0.3;
  double field_shift_gain = 2.0;
  FieldDirection field_direction = FieldDirection::kGradient;
  double k_b1 = 4.0;
  double k_b2 = 3.75;
  double b_pl = 0.94;
  double front_range = 100.0;
  double back_range = 100.0;
  double ax_min = -4.5;
  double ax_max = 2.6;
  double ay_min = -1.5;
  double ay_max = 1.5;
  double jx_min = -2.0;
  double jx_max = 2.0;
  double jy_min = -2.0;
  double jy_max = 2.0;
  double accel_pref = 1.5;
  double decel_comfort = -1.5;
  double min_gap = 2.0;
  double tau_s = 0.5;

  void validate() const;
  FollowingLimits following() const { return {decel_comfort, accel_pref, min_gap, std::nullopt}; }
};

struct FleetSpeedRange {
  double v_min = 25.0;
  double v_max = 35.0;
};

FleetSpeedRange speed_range(Fleet fleet);

/// Potential line: desired speeds spread linearly from the right margin
/// (slowest) to the left margin (fastest).
double assign_pl(double v_des, const FleetSpeedRange& range, const RoadGeometry& road,
                 const CavParams& params);

double pl_force(double y_pl, double y, double vy, const CavParams& params);

double cruise_force(double vx, double v_des, const CavParams& params, double dt);

/// Ellipsoidal field value in (0, 1] at offset (dx, dy) from the ellipse center.
double field_magnitude(double dx, double dy, double sd1, double sd2, const CavParams& params);

struct FieldForce {
  double magnitude = 0.0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Force exerted by `other` on `subject`. It points along the outward normal
/// of the ellipse level set through the subject: backwards for a neighbour
/// ahead, forwards for one behind, laterally away from the neighbour.
FieldForce potential_force(const Vehicle& subject, const Vehicle& other, bool other_is_ahead,
                           const CavParams& params, const RoadGeometry& road);

struct ForceSum {
  double fx = 0.0;
  double fy = 0.0;
};

/// w_nudge * sum over vehicles ahead + w_repulse * sum over vehicles behind,
/// HDVs included, each list in ascending-gap order.
ForceSum accumulate_forces(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                           const CavParams& params, const RoadGeometry& road);

struct AccelBounds {
  double lower = 0.0;
  double upper = 0.0;
};

AccelBounds boundary_limit(double y, double vy, double width, const RoadGeometry& road,
                           const CavParams& params);

/// Nearest vehicle ahead within front_range whose body overlaps laterally.
std::optional<Neighbor> cav_leader(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                                   const CavParams& params);

double cav_safe_velocity(const Vehicle& subject, const Neighbor& leader, Fleet fleet,
                         const CavParams& params);

/// Safe bound, acceleration limits, then jerk limits around `prev_ax`.
double limit_longitudinal(double ax_raw, std::optional<double> a_safe, double prev_ax,
                          const CavParams& params, double dt);

/// Boundary bounds, acceleration limits, then jerk limits around `prev_ay`.
double limit_lateral(double ay_raw, const AccelBounds& bounds, double prev_ay,
                     const CavParams& params, double dt);

struct CavAction {
  Accel accel;
  std::optional<Neighbor> leader;
};

CavAction cav_step(std::size_t subject, Fleet fleet, const NeighborIndex& index,
                   double y_pl_effective, const CavParams& params, const RoadGeometry& road,
                   double dt);

}  // namespace lft
