#pragma once

#include <optional>
#include <vector>

#include "lft/core.hpp"
#include "lft/pl_controller.hpp"

namespace lft {

enum class AplStrategy { kCm, kNscm, kFam, kSvam };

/// Strategy for a controller kind; empty for plain PL.
std::optional<AplStrategy> apl_strategy(ControllerKind kind);

struct AplParams {
  double x_cm = 40.0;
  double x_am = 40.0;
  double b_apl = 0.94;
  double epsilon = 0.05;
  double neighbor_window_m = 20.0;
  AplStrategy strategy = AplStrategy::kNscm;

  void validate() const;
};

struct LateralInterval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  friend bool operator==(const LateralInterval&, const LateralInterval&) = default;
};

/// Longitudinal stretch [x_low, x_low + length_m] of the ring together with the
/// lateral intervals available for potential lines inside it.
struct AplRegion {
  double x_low = 0.0;
  double x_high = 0.0;
  double length_m = 0.0;  // equals the ring length for a region covering everything
  std::vector<LateralInterval> free_intervals;  // ascending, right to left
  std::vector<int> blocking_hdvs;

  bool contains(double x, const RoadGeometry& road) const;
};

/// Raw ring interval before merging.
struct RingSpan {
  double start = 0.0;
  double length = 0.0;
};

/// Mean vx of vehicles behind the HDV (bumper gap up to the window) whose
/// bodies do not overlap it laterally.
std::optional<double> surrounding_speed(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                        const AplParams& params);

/// Nearest CAV behind the HDV, within x_am, whose overlap leader is the HDV.
std::optional<Neighbor> follower_cav(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                     const AplParams& apl, const CavParams& cav);

/// Distance behind the HDV covered by its corridor, or empty when inactive.
std::optional<double> activation_margin(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                        const AplParams& apl, const CavParams& cav);

/// Merges ring spans that overlap or touch into maximal spans, sorted by start.
std::vector<RingSpan> merge_ring_spans(std::vector<RingSpan> spans, double ring_length);

/// Lateral center positions left free by the given HDVs, including the
/// b_pl margin at the road edges; gaps too narrow for a vehicle are dropped.
std::vector<LateralInterval> free_lateral_intervals(Fleet fleet, const std::vector<int>& hdvs,
                                                    const RoadGeometry& road, const AplParams& apl,
                                                    const CavParams& cav);

std::vector<AplRegion> build_regions(Fleet fleet, const NeighborIndex& index,
                                     const RoadGeometry& road, const AplParams& apl,
                                     const CavParams& cav);

/// Maps v_des proportionally onto the concatenated free intervals of a region.
double map_to_intervals(double v_des, const std::vector<LateralInterval>& intervals,
                        const FleetSpeedRange& range);

double effective_pl(const Vehicle& cav, const std::vector<AplRegion>& regions,
                    const FleetSpeedRange& range, const RoadGeometry& road,
                    const CavParams& params);

/// Effective potential line per vehicle index (HDV entries keep their plain
/// assignment and are ignored by the engine).
std::vector<double> apl_step(Fleet fleet, const NeighborIndex& index, const RoadGeometry& road,
                             const FleetSpeedRange& range, const AplParams& apl,
                             const CavParams& cav);

}  // namespace lft
