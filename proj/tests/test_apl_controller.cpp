#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lft/apl_controller.hpp"
#include "lft/engine.hpp"
#include "support.hpp"

namespace lft {
namespace {

using test::make_hdv;
using test::make_vehicle;

AplParams with(AplStrategy s) {
  AplParams p;
  p.strategy = s;
  return p;
}

TEST(SurroundingSpeed, MeanOfNonOverlappingFollowers) {
  const RoadGeometry road;
  const AplParams p;
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.0, 4, 1.7, 15), make_vehicle(1, 90, 2.0, 4, 1.7, 20),
                                      make_vehicle(2, 85, 8.0, 4, 1.7, 24), make_vehicle(3, 92, 5.0, 4, 1.7, 5),
                                      make_vehicle(4, 60, 8.0, 4, 1.7, 30)};
  const NeighborIndex index(fleet, road, 100, 100);
  EXPECT_REL((20.0 + 24.0) / 2.0, 22.0);
  const auto v = surrounding_speed(0, fleet, index, p);
  ASSERT_TRUE(v);
  EXPECT_REL(*v, 22.0);
}

TEST(SurroundingSpeed, OnlyOverlappingOrEmpty) {
  const RoadGeometry road;
  const AplParams p;
  const std::vector<Vehicle> a = {make_hdv(0, 100, 5.0), make_vehicle(1, 90, 5.2, 4, 1.7, 20)};
  EXPECT_FALSE(surrounding_speed(0, a, NeighborIndex(a, road, 100, 100), p));
  const std::vector<Vehicle> b = {make_hdv(0, 100, 5.0), make_vehicle(1, 50, 2.0, 4, 1.7, 20)};
  EXPECT_FALSE(surrounding_speed(0, b, NeighborIndex(b, road, 100, 100), p));
}

TEST(ActivationMargin, Cm) {
  const RoadGeometry road;
  const CavParams cav;
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.0, 4, 1.7, 30)};
  const NeighborIndex index(fleet, road, 100, 100);
  EXPECT_EQ(activation_margin(0, fleet, index, with(AplStrategy::kCm), cav), 40.0);
}

TEST(ActivationMargin, NscmNotSlower) {
  const RoadGeometry road;
  const CavParams cav;
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.0, 4, 1.7, 25), make_vehicle(1, 90, 2.0, 4, 1.7, 22)};
  const NeighborIndex index(fleet, road, 100, 100);
  EXPECT_FALSE(activation_margin(0, fleet, index, with(AplStrategy::kNscm), cav));
  const std::vector<Vehicle> slow = {make_hdv(0, 100, 5.0, 4, 1.7, 20), make_vehicle(1, 90, 2.0, 4, 1.7, 22)};
  EXPECT_EQ(activation_margin(0, slow, NeighborIndex(slow, road, 100, 100), with(AplStrategy::kNscm), cav), 40.0);
}

TEST(ActivationMargin, FamBackToBackDistance) {
  const RoadGeometry road;
  const CavParams cav;
  // HDV back at 98; follower CAV back at 85.5.
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.0, 4, 1.7, 10), make_vehicle(1, 87.5, 5.0, 4, 1.7, 12),
                                      make_vehicle(2, 92, 8.0, 4, 1.7, 25)};
  const NeighborIndex index(fleet, road, 100, 100);
  const double oracle = (100.0 - 2.0) - (87.5 - 2.0);
  EXPECT_REL(oracle, 12.5);
  const auto m = activation_margin(0, fleet, index, with(AplStrategy::kFam), cav);
  ASSERT_TRUE(m);
  EXPECT_REL(*m, 12.5);
}

TEST(ActivationMargin, SvamNeedsFollowerAtSafeSpeed) {
  const RoadGeometry road;
  const CavParams cav;
  std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.0, 4, 1.7, 10), make_vehicle(1, 87.5, 5.0, 4, 1.7, 12),
                                make_vehicle(2, 92, 8.0, 4, 1.7, 25)};
  const double v_safe = cav_safe_velocity(fleet[1], Neighbor{0, 8.5}, fleet, cav);
  fleet[1].state.vx = v_safe;
  EXPECT_TRUE(activation_margin(0, fleet, NeighborIndex(fleet, road, 100, 100), with(AplStrategy::kSvam), cav));
  fleet[1].state.vx = 1.05 * v_safe + 0.5;
  EXPECT_FALSE(activation_margin(0, fleet, NeighborIndex(fleet, road, 100, 100), with(AplStrategy::kSvam), cav));
}

TEST(FreeIntervals, SingleCenteredHdv) {
  const RoadGeometry road;
  const CavParams cav;
  const AplParams p;
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 5.1, 4, 1.7)};
  // Oracle: road [0.94, 9.26] minus [5.1 - 0.85 - 0.94, 5.1 + 0.85 + 0.94].
  const double lo = 5.1 - 0.85 - 0.94, hi = 5.1 + 0.85 + 0.94;
  EXPECT_NEAR(lo, 3.31, 1e-12);
  EXPECT_NEAR(hi, 6.89, 1e-12);
  const auto iv = free_lateral_intervals(fleet, {0}, road, p, cav);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_REL(iv[0].lo, 0.94);
  EXPECT_REL(iv[0].hi, 3.31);
  EXPECT_REL(iv[1].lo, 6.89);
  EXPECT_REL(iv[1].hi, 9.26);
}

TEST(FreeIntervals, NarrowGapDiscarded) {
  const RoadGeometry road;
  const CavParams cav;
  const AplParams p;
  // Bodies [2.15, 3.85] and [5.35, 7.05]: 1.5 m apart.
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 3.0, 4, 1.7), make_hdv(1, 100, 6.2, 4, 1.7)};
  for (const auto& iv : free_lateral_intervals(fleet, {0, 1}, road, p, cav)) {
    EXPECT_FALSE(iv.lo > 3.85 && iv.hi < 5.35);
    EXPECT_GT(iv.width(), 0.0);
  }
}

TEST(BuildRegions, NearbyHdvsMerge) {
  const RoadGeometry road;
  const CavParams cav;
  const std::vector<Vehicle> fleet = {make_hdv(0, 100, 2.0), make_hdv(1, 110, 8.0)};
  const NeighborIndex index(fleet, road, 100, 100);
  const auto regions = build_regions(fleet, index, road, with(AplStrategy::kCm), cav);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].blocking_hdvs.size(), 2u);
  EXPECT_NEAR(regions[0].x_low, 58.0, 1e-9);
  EXPECT_NEAR(regions[0].length_m, 54.0, 1e-9);
}

TEST(BuildRegions, RegionAcrossTheSeam) {
  const RoadGeometry road;
  const CavParams cav;
  const std::vector<Vehicle> fleet = {make_hdv(0, 10, 5.0)};
  const NeighborIndex index(fleet, road, 100, 100);
  const auto regions = build_regions(fleet, index, road, with(AplStrategy::kCm), cav);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_TRUE(regions[0].contains(980.0, road));
  EXPECT_TRUE(regions[0].contains(5.0, road));
  EXPECT_FALSE(regions[0].contains(20.0, road));
}

TEST(MergeRingSpans, IdempotentAndOrderIndependent) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> s(0, 1000), l(5, 80);
  for (int k = 0; k < 300; ++k) {
    std::vector<RingSpan> spans;
    for (int i = 0; i < 12; ++i) spans.push_back({s(gen), l(gen)});
    const auto a = merge_ring_spans(spans, 1000);
    std::shuffle(spans.begin(), spans.end(), gen);
    const auto b = merge_ring_spans(spans, 1000);
    const auto c = merge_ring_spans(a, 1000);
    ASSERT_EQ(a.size(), b.size());
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].start, b[i].start, 1e-9);
      EXPECT_NEAR(a[i].length, b[i].length, 1e-9);
      EXPECT_NEAR(a[i].start, c[i].start, 1e-9);
      EXPECT_NEAR(a[i].length, c[i].length, 1e-9);
    }
    // Brute force coverage on a 1 m lattice.
    for (int x = 0; x < 1000; ++x) {
      bool in_raw = false, in_merged = false;
      for (const auto& r : spans) in_raw |= forward_distance(r.start, x + 0.5, 1000) <= r.length;
      for (const auto& r : a) in_merged |= forward_distance(r.start, x + 0.5, 1000) <= r.length;
      EXPECT_EQ(in_raw, in_merged);
    }
  }
}

TEST(EffectivePl, OutsideRegionsUsesLinearMap) {
  const RoadGeometry road;
  const CavParams cav;
  const Vehicle v = make_vehicle(0, 500, 5, 4, 1.7, 20, VehicleClass::kCav, 30);
  EXPECT_REL(effective_pl(v, {}, FleetSpeedRange{25, 35}, road, cav), 5.1);
}

TEST(EffectivePl, EndsOfTheIntervals) {
  const std::vector<LateralInterval> iv = {{0.94, 3.31}, {6.89, 9.26}};
  const FleetSpeedRange r{25, 35};
  EXPECT_REL(map_to_intervals(25, iv, r), 0.94);
  EXPECT_REL(map_to_intervals(35, iv, r), 9.26);
  // Exact boundary between the intervals stays on the right one.
  EXPECT_REL(map_to_intervals(30, iv, r), 3.31);
}

TEST(EffectivePl, MonotoneInDesiredSpeed) {
  const std::vector<LateralInterval> iv = {{0.94, 2.0}, {4.0, 4.5}, {7.0, 9.26}};
  const FleetSpeedRange r{25, 35};
  double prev = -1;
  for (double v = 25; v <= 35; v += 0.01) {
    const double y = map_to_intervals(v, iv, r);
    EXPECT_GE(y, prev);
    const bool inside = std::any_of(iv.begin(), iv.end(), [y](const LateralInterval& i) { return y >= i.lo && y <= i.hi; });
    EXPECT_TRUE(inside);
    prev = y;
  }
}

TEST(AplStep, NoHdvsReducesToPl) {
  SimConfig c;
  c.density_veh_km = 100;
  const World w = init_scenario(c);
  const NeighborIndex index(w.fleet(), w.road, 100, 100);
  for (AplStrategy s : {AplStrategy::kCm, AplStrategy::kNscm, AplStrategy::kFam, AplStrategy::kSvam}) {
    const auto pl = apl_step(w.fleet(), index, w.road, w.range, with(s), c.params.cav);
    for (std::size_t i = 0; i < pl.size(); ++i) {
      EXPECT_EQ(pl[i], assign_pl(w.vehicles[i].spec.v_des, w.range, w.road, c.params.cav));
    }
  }
}

TEST(AplStep, PlControllerBypassesModule) { EXPECT_FALSE(apl_strategy(ControllerKind::kPl)); }

// Snapshots from a short mixed run, shared by the region tests below.
std::vector<World> mixed_snapshots() {
  SimConfig c;
  c.density_veh_km = 200;
  c.hdv_rate = 0.2;
  std::vector<World> out;
  for (std::uint64_t seed : {1, 2, 3}) {
    c.seed = seed;
    Simulation sim(c);
    for (int k = 1; k <= 480; ++k) {
      sim.step();
      if (k % 120 == 0) out.push_back(sim.world());
    }
  }
  return out;
}

TEST(AplStep, ActivationSetsAreNested) {
  const CavParams cav;
  int fam_total = 0;
  for (const World& w : mixed_snapshots()) {
    const NeighborIndex index(w.fleet(), w.road, 100, 100);
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
      if (!w.vehicles[i].is_hdv()) continue;
      auto on = [&](AplStrategy s) { return activation_margin(i, w.fleet(), index, with(s), cav).has_value(); };
      const bool cm = on(AplStrategy::kCm), nscm = on(AplStrategy::kNscm);
      const bool fam = on(AplStrategy::kFam), svam = on(AplStrategy::kSvam);
      EXPECT_TRUE(cm);
      EXPECT_TRUE(!nscm || cm);
      EXPECT_TRUE(!fam || nscm);
      EXPECT_TRUE(!svam || fam);
      fam_total += fam;
    }
  }
  EXPECT_GT(fam_total, 0);
}

TEST(AplStep, EffectiveLinesKeepClearOfBlockingHdvs) {
  const CavParams cav;
  for (AplStrategy s : {AplStrategy::kCm, AplStrategy::kNscm, AplStrategy::kFam, AplStrategy::kSvam}) {
    const AplParams apl = with(s);
    for (const World& w : mixed_snapshots()) {
      const NeighborIndex index(w.fleet(), w.road, 100, 100);
      const auto regions = build_regions(w.fleet(), index, w.road, apl, cav);
      for (const auto& v : w.vehicles) {
        if (!v.is_cav()) continue;
        const double y = effective_pl(v, regions, w.range, w.road, cav);
        for (const auto& r : regions) {
          if (!r.contains(v.state.x, w.road)) continue;
          for (int h : r.blocking_hdvs) {
            const Vehicle& hv = w.vehicles[static_cast<std::size_t>(h)];
            EXPECT_FALSE(y > hv.right_edge() - apl.b_apl + 1e-9 && y < hv.left_edge() + apl.b_apl - 1e-9);
          }
          break;
        }
      }
    }
  }
}

}  // namespace
}  // namespace lft
