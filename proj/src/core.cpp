#include "lft/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lft {

void RoadGeometry::validate() const {
  if (!(length_m > 0.0)) throw ConfigError("road length must be > 0");
  if (!(y_left > y_right)) throw ConfigError("road y_left must exceed y_right");
}

std::string_view to_string(VehicleClass cls) { return cls == VehicleClass::kHdv ? "HDV" : "CAV"; }

void VehicleSpec::validate(const RoadGeometry& road) const {
  if (!(length_m > 0.0)) throw ConfigError("vehicle length must be > 0");
  if (!(width_m > 0.0) || !(width_m < road.width())) {
    throw ConfigError("vehicle width must lie in (0, road width)");
  }
  if (!(v_des > 0.0)) throw ConfigError("desired speed must be > 0");
  if (!(tau_s > 0.0)) throw ConfigError("reaction time must be > 0");
}

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kPl: return "pl";
    case ControllerKind::kCm: return "cm";
    case ControllerKind::kNscm: return "nscm";
    case ControllerKind::kFam: return "fam";
    case ControllerKind::kSvam: return "svam";
  }
  return "pl";
}

ControllerKind parse_controller(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "pl") return ControllerKind::kPl;
  if (lower == "cm") return ControllerKind::kCm;
  if (lower == "nscm") return ControllerKind::kNscm;
  if (lower == "fam") return ControllerKind::kFam;
  if (lower == "svam") return ControllerKind::kSvam;
  throw ConfigError("controller: unknown value '" + std::string(name) +
                    "' (accepted: pl, cm, nscm, fam, svam)");
}

double wrap_position(double x, double length_m) {
  double r = std::fmod(x, length_m);
  if (r < 0.0) r += length_m;
  // fmod of a value just below a multiple of L can round up to L itself.
  if (r >= length_m) r = 0.0;
  return r;
}

double forward_distance(double from, double to, double length_m) {
  return wrap_position(to - from, length_m);
}

double forward_gap(const Vehicle& follower, const Vehicle& leader, const RoadGeometry& road) {
  return wrap_position(leader.back() - follower.front(), road.length_m);
}

bool lateral_overlap(const Vehicle& a, const Vehicle& b) {
  return std::min(a.left_edge(), b.left_edge()) > std::max(a.right_edge(), b.right_edge());
}

bool bodies_overlap(const Vehicle& a, const Vehicle& b, const RoadGeometry& road) {
  if (!lateral_overlap(a, b)) return false;
  const double d = forward_distance(a.state.x, b.state.x, road.length_m);
  const double center_dist = std::min(d, road.length_m - d);
  return center_dist < 0.5 * (a.spec.length_m + b.spec.length_m);
}

double boundary_excess(const Vehicle& v, const RoadGeometry& road) {
  return std::max({0.0, road.y_right - v.right_edge(), v.left_edge() - road.y_left});
}

NeighborIndex::NeighborIndex(Fleet fleet, const RoadGeometry& road, double front_range_m,
                             double back_range_m) {
  rebuild(fleet, road, front_range_m, back_range_m);
}

void NeighborIndex::rebuild(Fleet fleet, const RoadGeometry& road, double front_range_m,
                            double back_range_m) {
  const std::size_t n = fleet.size();
  const double L = road.length_m;
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (fleet[a].state.x != fleet[b].state.x) return fleet[a].state.x < fleet[b].state.x;
    return a < b;
  });

  double max_len = 0.0;
  for (const auto& v : fleet) max_len = std::max(max_len, v.spec.length_m);

  ahead_.clear();
  behind_.clear();
  ahead_offsets_.assign(1, 0);
  behind_offsets_.assign(1, 0);
  ahead_offsets_.reserve(n + 1);
  behind_offsets_.reserve(n + 1);

  std::vector<std::size_t> rank(n);
  for (std::size_t p = 0; p < n; ++p) rank[order_[p]] = p;

  auto by_gap = [](const Neighbor& a, const Neighbor& b) {
    return a.gap_m != b.gap_m ? a.gap_m < b.gap_m : a.index < b.index;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Vehicle& vi = fleet[i];
    const std::size_t p = rank[i];

    const std::size_t a0 = ahead_.size();
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t j = order_[(p + k) % n];
      const double d = forward_distance(vi.state.x, fleet[j].state.x, L);
      if (d >= 0.5 * L || d >= front_range_m + max_len) break;
      if (d <= 0.0) continue;
      const double gap = d - 0.5 * (vi.spec.length_m + fleet[j].spec.length_m);
      if (gap < front_range_m) ahead_.push_back({j, gap});
    }
    std::sort(ahead_.begin() + static_cast<std::ptrdiff_t>(a0), ahead_.end(), by_gap);
    ahead_offsets_.push_back(ahead_.size());

    const std::size_t b0 = behind_.size();
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t j = order_[(p + n - k) % n];
      const double d = forward_distance(fleet[j].state.x, vi.state.x, L);
      if (d >= 0.5 * L || d >= back_range_m + max_len) break;
      if (d <= 0.0) continue;
      const double gap = d - 0.5 * (vi.spec.length_m + fleet[j].spec.length_m);
      if (gap < back_range_m) behind_.push_back({j, gap});
    }
    std::sort(behind_.begin() + static_cast<std::ptrdiff_t>(b0), behind_.end(), by_gap);
    behind_offsets_.push_back(behind_.size());
  }
}

std::span<const Neighbor> NeighborIndex::ahead(std::size_t i) const {
  return {ahead_.data() + ahead_offsets_[i], ahead_offsets_[i + 1] - ahead_offsets_[i]};
}

std::span<const Neighbor> NeighborIndex::behind(std::size_t i) const {
  return {behind_.data() + behind_offsets_[i], behind_offsets_[i + 1] - behind_offsets_[i]};
}

}  // namespace lft
