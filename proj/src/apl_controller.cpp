#include "lft/apl_controller.hpp"

#include <algorithm>
#include <cmath>

namespace lft {

std::optional<AplStrategy> apl_strategy(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kPl: return std::nullopt;
    case ControllerKind::kCm: return AplStrategy::kCm;
    case ControllerKind::kNscm: return AplStrategy::kNscm;
    case ControllerKind::kFam: return AplStrategy::kFam;
    case ControllerKind::kSvam: return AplStrategy::kSvam;
  }
  return std::nullopt;
}

void AplParams::validate() const {
  if (!(x_cm > 0.0) || !(x_am > 0.0) || !(b_apl > 0.0) || !(neighbor_window_m > 0.0)) {
    throw ConfigError("apl distances (x_cm, x_am, b_apl, window) must be > 0");
  }
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon: must be >= 0");
}

bool AplRegion::contains(double x, const RoadGeometry& road) const {
  return forward_distance(x_low, x, road.length_m) <= length_m;
}

std::optional<double> surrounding_speed(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                        const AplParams& params) {
  const Vehicle& me = fleet[hdv];
  double sum = 0.0;
  int count = 0;
  for (const Neighbor& nb : index.behind(hdv)) {
    if (nb.gap_m > params.neighbor_window_m) break;
    const Vehicle& other = fleet[nb.index];
    if (lateral_overlap(me, other)) continue;
    sum += other.state.vx;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::optional<Neighbor> follower_cav(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                     const AplParams& apl, const CavParams& cav) {
  for (const Neighbor& nb : index.behind(hdv)) {
    if (nb.gap_m >= apl.x_am) break;
    if (!fleet[nb.index].is_cav()) continue;
    const auto leader = cav_leader(nb.index, fleet, index, cav);
    if (leader && leader->index == hdv) return nb;
  }
  return std::nullopt;
}

std::optional<double> activation_margin(std::size_t hdv, Fleet fleet, const NeighborIndex& index,
                                        const AplParams& apl, const CavParams& cav) {
  if (apl.strategy == AplStrategy::kCm) return apl.x_cm;

  const auto v_s = surrounding_speed(hdv, fleet, index, apl);
  const bool slower = v_s && fleet[hdv].state.vx < *v_s;
  if (apl.strategy == AplStrategy::kNscm) {
    return slower ? std::optional<double>(apl.x_cm) : std::nullopt;
  }
  if (!slower) return std::nullopt;

  const auto follower = follower_cav(hdv, fleet, index, apl, cav);
  if (!follower) return std::nullopt;
  const Vehicle& f = fleet[follower->index];
  if (apl.strategy == AplStrategy::kSvam) {
    // The follower's own leader is the HDV, so its gap is the same neighbour gap.
    const Neighbor lead{hdv, follower->gap_m};
    const double v_safe = cav_safe_velocity(f, lead, fleet, cav);
    if (!(f.state.vx <= (1.0 + apl.epsilon) * v_safe)) return std::nullopt;
  }
  // Back of the HDV to back of the follower.
  return follower->gap_m + f.spec.length_m;
}

std::vector<RingSpan> merge_ring_spans(std::vector<RingSpan> spans, double ring_length) {
  std::vector<RingSpan> merged;
  if (spans.empty()) return merged;
  for (const auto& s : spans) {
    if (s.length >= ring_length) return {{0.0, ring_length}};
  }
  std::sort(spans.begin(), spans.end(), [](const RingSpan& a, const RingSpan& b) {
    return a.start != b.start ? a.start < b.start : a.length < b.length;
  });
  RingSpan cur = spans.front();
  for (std::size_t i = 1; i < spans.size(); ++i) {
    const RingSpan& s = spans[i];
    if (s.start <= cur.start + cur.length) {
      cur.length = std::max(cur.start + cur.length, s.start + s.length) - cur.start;
    } else {
      merged.push_back(cur);
      cur = s;
    }
  }
  merged.push_back(cur);

  // The last span may run past the ring end into the first ones.
  while (merged.size() > 1 &&
         merged.back().start + merged.back().length >= merged.front().start + ring_length) {
    RingSpan& last = merged.back();
    const RingSpan& first = merged.front();
    last.length = std::max(last.start + last.length, first.start + first.length + ring_length) -
                  last.start;
    merged.erase(merged.begin());
  }
  if (merged.size() == 1 && merged.front().length >= ring_length) return {{0.0, ring_length}};
  return merged;
}

std::vector<LateralInterval> free_lateral_intervals(Fleet fleet, const std::vector<int>& hdvs,
                                                    const RoadGeometry& road, const AplParams& apl,
                                                    const CavParams& cav) {
  std::vector<LateralInterval> blocked;
  blocked.reserve(hdvs.size());
  for (int id : hdvs) {
    const Vehicle& h = fleet[static_cast<std::size_t>(id)];
    blocked.push_back({h.right_edge() - apl.b_apl, h.left_edge() + apl.b_apl});
  }
  std::sort(blocked.begin(), blocked.end(),
            [](const LateralInterval& a, const LateralInterval& b) { return a.lo < b.lo; });

  std::vector<LateralInterval> free;
  double cursor = road.y_right + cav.b_pl;
  const double limit = road.y_left - cav.b_pl;
  for (const auto& b : blocked) {
    if (b.lo > cursor) free.push_back({cursor, std::min(b.lo, limit)});
    cursor = std::max(cursor, b.hi);
    if (cursor >= limit) break;
  }
  if (limit > cursor) free.push_back({cursor, limit});
  // A vehicle fits only where the physical gap is at least 2*b_apl, which for
  // center positions means a non-degenerate interval.
  std::erase_if(free, [](const LateralInterval& iv) { return !(iv.hi > iv.lo); });
  return free;
}

std::vector<AplRegion> build_regions(Fleet fleet, const NeighborIndex& index,
                                     const RoadGeometry& road, const AplParams& apl,
                                     const CavParams& cav) {
  const double L = road.length_m;
  std::vector<RingSpan> raw;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (!fleet[i].is_hdv()) continue;
    const auto margin = activation_margin(i, fleet, index, apl, cav);
    if (!margin) continue;
    const Vehicle& h = fleet[i];
    raw.push_back({wrap_position(h.back() - *margin, L), *margin + h.spec.length_m});
  }

  std::vector<AplRegion> regions;
  for (const RingSpan& span : merge_ring_spans(std::move(raw), L)) {
    AplRegion region;
    region.x_low = span.start;
    region.length_m = span.length;
    region.x_high = wrap_position(span.start + span.length, L);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (fleet[i].is_hdv() && region.contains(fleet[i].state.x, road)) {
        region.blocking_hdvs.push_back(static_cast<int>(i));
      }
    }
    region.free_intervals = free_lateral_intervals(fleet, region.blocking_hdvs, road, apl, cav);
    if (!region.free_intervals.empty()) regions.push_back(std::move(region));
  }
  return regions;
}

double map_to_intervals(double v_des, const std::vector<LateralInterval>& intervals,
                        const FleetSpeedRange& range) {
  double frac = 0.5;
  if (range.v_max > range.v_min) {
    frac = std::clamp((v_des - range.v_min) / (range.v_max - range.v_min), 0.0, 1.0);
  }
  double total = 0.0;
  for (const auto& iv : intervals) total += iv.width();
  double pos = frac * total;
  for (const auto& iv : intervals) {
    if (pos <= iv.width()) return iv.lo + pos;
    pos -= iv.width();
  }
  return intervals.back().hi;
}

double effective_pl(const Vehicle& cav, const std::vector<AplRegion>& regions,
                    const FleetSpeedRange& range, const RoadGeometry& road,
                    const CavParams& params) {
  for (const auto& region : regions) {
    if (region.contains(cav.state.x, road)) {
      return map_to_intervals(cav.spec.v_des, region.free_intervals, range);
    }
  }
  return assign_pl(cav.spec.v_des, range, road, params);
}

std::vector<double> apl_step(Fleet fleet, const NeighborIndex& index, const RoadGeometry& road,
                             const FleetSpeedRange& range, const AplParams& apl,
                             const CavParams& cav) {
  const std::vector<AplRegion> regions = build_regions(fleet, index, road, apl, cav);
  std::vector<double> out(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    out[i] = fleet[i].is_cav() ? effective_pl(fleet[i], regions, range, road, cav)
                               : assign_pl(fleet[i].spec.v_des, range, road, cav);
  }
  return out;
}

}  // namespace lft
