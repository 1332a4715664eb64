#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lft {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Straight periodic road segment emulating a ring. Lateral axis points left.
struct RoadGeometry {
  double length_m = 1000.0;
  double y_right = 0.0;
  double y_left = 10.2;

  double width() const { return y_left - y_right; }
  void validate() const;
};

enum class VehicleClass { kHdv, kCav };

std::string_view to_string(VehicleClass cls);

struct VehicleSpec {
  int id = 0;
  VehicleClass cls = VehicleClass::kCav;
  double length_m = 4.0;
  double width_m = 1.7;
  double v_des = 30.0;
  double tau_s = 0.5;

  void validate(const RoadGeometry& road) const;
};

/// Center position, speeds and the accelerations applied during the last step.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double ax = 0.0;
  double ay = 0.0;
};

struct Vehicle {
  VehicleSpec spec;
  VehicleState state;

  bool is_hdv() const { return spec.cls == VehicleClass::kHdv; }
  bool is_cav() const { return spec.cls == VehicleClass::kCav; }
  double front() const { return state.x + 0.5 * spec.length_m; }
  double back() const { return state.x - 0.5 * spec.length_m; }
  double right_edge() const { return state.y - 0.5 * spec.width_m; }
  double left_edge() const { return state.y + 0.5 * spec.width_m; }
};

using Fleet = std::span<const Vehicle>;

enum class ControllerKind { kPl, kCm, kNscm, kFam, kSvam };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller(std::string_view name);

struct Accel {
  double ax = 0.0;
  double ay = 0.0;
};

// Ring arithmetic. Every stored coordinate is already wrapped into [0, L).

double wrap_position(double x, double length_m);

/// Distance travelled in driving direction from `from` to `to`, in [0, L).
double forward_distance(double from, double to, double length_m);

/// Front bumper of `follower` to back bumper of `leader`, wrapped into [0, L).
double forward_gap(const Vehicle& follower, const Vehicle& leader, const RoadGeometry& road);

/// True when the lateral extents intersect with positive measure.
bool lateral_overlap(const Vehicle& a, const Vehicle& b);

/// Bounding-box intersection with positive measure on the ring.
bool bodies_overlap(const Vehicle& a, const Vehicle& b, const RoadGeometry& road);

/// Amount by which the body sticks out of [y_right, y_left]; 0 when inside.
double boundary_excess(const Vehicle& v, const RoadGeometry& road);

/// A neighbour of some subject vehicle. `gap_m` is bumper to bumper along the
/// ring and becomes negative when the bodies overlap longitudinally.
struct Neighbor {
  std::size_t index = 0;
  double gap_m = 0.0;
};

/// Per-step index of the vehicles ahead of and behind every vehicle.
///
/// A vehicle counts as ahead when its center is strictly ahead by less than
/// half the ring, and as behind in the mirrored case. Lists hold only
/// neighbours whose bumper gap is below the configured range and are sorted
/// by gap, ties broken by index.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(Fleet fleet, const RoadGeometry& road, double front_range_m, double back_range_m);

  void rebuild(Fleet fleet, const RoadGeometry& road, double front_range_m, double back_range_m);

  std::span<const Neighbor> ahead(std::size_t i) const;
  std::span<const Neighbor> behind(std::size_t i) const;
  std::size_t size() const { return ahead_offsets_.empty() ? 0 : ahead_offsets_.size() - 1; }

 private:
  std::vector<std::size_t> order_;
  std::vector<Neighbor> ahead_;
  std::vector<Neighbor> behind_;
  std::vector<std::size_t> ahead_offsets_;
  std::vector<std::size_t> behind_offsets_;
};

}  // namespace lft
