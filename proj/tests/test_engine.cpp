#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "lft/engine.hpp"
#include "support.hpp"

namespace lft {
namespace {

using test::make_hdv;
using test::make_vehicle;

TEST(Init, VehicleAndTypeCounts) {
  SimConfig c;
  c.density_veh_km = 200;
  const World w = init_scenario(c);
  ASSERT_EQ(w.vehicles.size(), 200u);
  std::map<double, int> by_length;
  for (const auto& v : w.vehicles) ++by_length[v.spec.length_m];
  ASSERT_EQ(by_length.size(), 5u);
  for (const auto& [len, n] : by_length) EXPECT_EQ(n, 40) << len;
}

TEST(Init, HdvCounts) {
  EXPECT_EQ(hdv_count(0.05, 200), 10u);
  EXPECT_EQ(hdv_count(0.01, 50), 1u);
  EXPECT_EQ(hdv_count(0.0, 400), 0u);
  EXPECT_EQ(hdv_count(1.0, 37), 37u);
  SimConfig c;
  c.density_veh_km = 200;
  c.hdv_rate = 0.05;
  const World w = init_scenario(c);
  EXPECT_EQ(std::count_if(w.vehicles.begin(), w.vehicles.end(), [](const Vehicle& v) { return v.is_hdv(); }), 10);
}

TEST(Init, PlacementIsValid) {
  SimConfig c;
  c.density_veh_km = 400;
  c.hdv_rate = 0.2;
  const World w = init_scenario(c);
  for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
    const Vehicle& v = w.vehicles[i];
    EXPECT_EQ(boundary_excess(v, w.road), 0.0);
    EXPECT_GE(v.spec.v_des, 25.0);
    EXPECT_LE(v.spec.v_des, 35.0);
    if (v.is_hdv()) {
      EXPECT_GE(v.spec.tau_s, 0.5);
      EXPECT_LE(v.spec.tau_s, 3.0);
    }
    for (std::size_t j = i + 1; j < w.vehicles.size(); ++j) {
      EXPECT_FALSE(bodies_overlap(v, w.vehicles[j], w.road));
    }
  }
}

TEST(Init, InfeasibleDensity) {
  SimConfig c;
  c.density_veh_km = 2000;
  EXPECT_THROW(init_scenario(c), InitError);
  c.density_veh_km = 400;
  c.init.max_placement_attempts = 50;
  EXPECT_THROW(init_scenario(c), InitError);
}

TEST(Integrate, Ballistic) {
  const RoadGeometry road;
  VehicleState s;
  s.x = 10;
  s.y = 5;
  s.vx = 20;
  const auto o = integrate(s, 0, 0, 0.25, road);
  EXPECT_REL(o.x, 15.0);
  EXPECT_EQ(o.y, 5.0);
  EXPECT_EQ(o.vx, 20.0);
}

TEST(Integrate, StandstillFloor) {
  const RoadGeometry road;
  VehicleState s;
  s.x = 10;
  s.vx = 0.1;
  const auto o = integrate(s, -1.5, 0, 0.25, road);
  EXPECT_EQ(o.vx, 0.0);
  // ax re-derived as -0.1 / 0.25, so x' = 10 + 0.025 - 0.0125.
  EXPECT_REL(o.ax, -0.4);
  EXPECT_REL(o.x, 10.0125);
}

TEST(Integrate, WrapsAroundTheRing) {
  const RoadGeometry road;
  VehicleState s;
  s.x = 999.9;
  s.vx = 30;
  const auto o = integrate(s, 0, 0, 0.25, road);
  EXPECT_NEAR(o.x, 7.4, 1e-9);
}

TEST(Integrate, Lateral) {
  const RoadGeometry road;
  VehicleState s;
  s.y = 5;
  s.vy = 0.4;
  const auto o = integrate(s, 0, -1.0, 0.25, road);
  EXPECT_REL(o.y, 5 + 0.1 - 0.03125);
  EXPECT_REL(o.vy, 0.15);
}

TEST(Run, StepCount) {
  SimConfig c;
  EXPECT_EQ(c.step_count(), 14400);
  c.density_veh_km = 0;
  c.duration_s = 3600;
  const RunResult r = run(c);
  EXPECT_EQ(r.summary.steps, 14400);
  EXPECT_EQ(r.vehicles, 0u);
  EXPECT_EQ(r.summary.flow_veh_h, 0.0);
}

TEST(Step, SingleHdvRampsToDesiredSpeed) {
  SimConfig c;
  c.density_veh_km = 1;
  c.hdv_rate = 1;
  World w = init_scenario(c);
  ASSERT_EQ(w.vehicles.size(), 1u);
  ASSERT_TRUE(w.vehicles[0].is_hdv());
  w.vehicles[0].state.vx = 0;
  const double v_des = w.vehicles[0].spec.v_des;
  const double oracle = v_des / c.params.hdv.accel_max;
  Simulation sim(c, w);
  double reached = -1;
  for (int k = 0; k < 200 && reached < 0; ++k) {
    sim.step();
    if (sim.world().vehicles[0].state.vx >= v_des - 1e-9) reached = sim.time();
  }
  ASSERT_GE(reached, 0);
  EXPECT_LE(std::abs(reached - oracle), c.dt_s);
  for (int k = 0; k < 40; ++k) sim.step();
  EXPECT_NEAR(sim.world().vehicles[0].state.vx, v_des, 1e-9);
}

TEST(Step, IsolatedCavsAdvanceTowardDesiredSpeed) {
  SimConfig c;
  c.density_veh_km = 2;
  World w;
  w.road = c.road;
  w.vehicles = {make_vehicle(0, 0, 3, 4, 1.7, 10, VehicleClass::kCav, 28),
                make_vehicle(1, 500, 7, 4, 1.7, 10, VehicleClass::kCav, 33)};
  w.memories.assign(2, DriverMemory{});
  w.range = FleetSpeedRange{28, 33};
  Simulation sim(c, w);
  double prev0 = 10, prev1 = 10;
  for (int k = 0; k < 400; ++k) {
    sim.step();
    const auto& v = sim.world().vehicles;
    EXPECT_GE(v[0].state.vx, prev0 - 1e-12);
    EXPECT_GE(v[1].state.vx, prev1 - 1e-12);
    prev0 = v[0].state.vx;
    prev1 = v[1].state.vx;
  }
  EXPECT_NEAR(prev0, 28, 0.05);
  EXPECT_NEAR(prev1, 33, 0.05);
}

void expect_same_world(const World& a, const World& b) {
  ASSERT_EQ(a.vehicles.size(), b.vehicles.size());
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    const auto& s = a.vehicles[i].state;
    const auto& t = b.vehicles[i].state;
    ASSERT_EQ(s.x, t.x);
    ASSERT_EQ(s.y, t.y);
    ASSERT_EQ(s.vx, t.vx);
    ASSERT_EQ(s.vy, t.vy);
    ASSERT_EQ(s.ax, t.ax);
    ASSERT_EQ(s.ay, t.ay);
  }
}

TEST(Determinism, WorkerCountDoesNotMatter) {
  for (ControllerKind kind : {ControllerKind::kPl, ControllerKind::kFam}) {
    SimConfig c;
    c.density_veh_km = 200;
    c.hdv_rate = 0.2;
    c.controller = kind;
    SimConfig c8 = c;
    c8.workers = 8;
    Simulation a(c), b(c8);
    for (int k = 0; k < 240; ++k) {
      a.step();
      b.step();
    }
    expect_same_world(a.world(), b.world());
  }
}

TEST(Determinism, RerunGivesIdenticalSummary) {
  SimConfig c;
  c.density_veh_km = 150;
  c.hdv_rate = 0.1;
  c.duration_s = 60;
  c.metrics.warmup_s = 20;
  const RunResult a = run(c);
  c.workers = 3;
  const RunResult b = run(c);
  EXPECT_EQ(a.summary.flow_veh_h, b.summary.flow_veh_h);
  EXPECT_EQ(a.summary.mean_speed_m_s, b.summary.mean_speed_m_s);
  EXPECT_EQ(a.summary.sigma_ax, b.summary.sigma_ax);
  EXPECT_EQ(a.summary.sigma_jy, b.summary.sigma_jy);
  EXPECT_EQ(a.summary.collisions, b.summary.collisions);
}

TEST(Invariants, NoReversingAndMassConservation) {
  for (ControllerKind kind : {ControllerKind::kPl, ControllerKind::kSvam}) {
    SimConfig c;
    c.density_veh_km = 300;
    c.hdv_rate = 0.3;
    c.controller = kind;
    c.seed = 7;
    Simulation sim(c);
    std::vector<int> ids;
    for (const auto& v : sim.world().vehicles) ids.push_back(v.spec.id);
    for (int k = 0; k < 480; ++k) {
      sim.step();
      const auto& vs = sim.world().vehicles;
      ASSERT_EQ(vs.size(), ids.size());
      for (std::size_t i = 0; i < vs.size(); ++i) {
        ASSERT_EQ(vs[i].spec.id, ids[i]);
        ASSERT_GE(vs[i].state.vx, 0.0);
        ASSERT_GE(vs[i].state.x, 0.0);
        ASSERT_LT(vs[i].state.x, c.road.length_m);
      }
    }
  }
}

// Holds for the base field geometry. The widened default field keeps
// same-speed trains pushed off their lines at these densities.
TEST(Invariants, PlSettlingInLightTrafficBaseField) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SimConfig c;
    c.density_veh_km = 50;
    c.seed = seed;
    c.params.cav.field_long_scale = 1.0;
    c.params.cav.field_lat_scale = 1.0;
    c.params.cav.field_shift_gain = 0.5;
    Simulation sim(c);
    for (int k = 0; k < 1200; ++k) sim.step();
    const World& w = sim.world();
    const double lo = w.road.y_right + 1.0, hi = w.road.y_left - 1.0;
    // Check over another minute so that a passing swerve does not count as settled.
    std::vector<double> worst(w.vehicles.size(), 0.0);
    for (int k = 0; k < 240; ++k) {
      sim.step();
      for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
        const Vehicle& v = sim.world().vehicles[i];
        const double pl = assign_pl(v.spec.v_des, w.range, w.road, c.params.cav);
        worst[i] = std::max(worst[i], std::abs(v.state.y - pl));
      }
    }
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
      const Vehicle& v = w.vehicles[i];
      const double pl = assign_pl(v.spec.v_des, w.range, w.road, c.params.cav);
      if (pl < lo || pl > hi) continue;
      EXPECT_LT(worst[i], 0.5) << "seed " << seed << " vehicle " << v.spec.id << " pl " << pl;
    }
  }
}

TEST(Audit, OverlapCountedOnce) {
  SimConfig c;
  c.density_veh_km = 2;
  World w;
  w.road = c.road;
  // Two stationary HDVs whose bodies already overlap stay overlapped.
  w.vehicles = {make_hdv(0, 100, 5, 4, 1.7, 0), make_hdv(1, 102, 5, 4, 1.7, 0)};
  w.memories.assign(2, DriverMemory{});
  w.range = FleetSpeedRange{30, 30};
  Simulation sim(c, w);
  int total = 0;
  for (int k = 0; k < 8; ++k) total += sim.step().collisions;
  EXPECT_EQ(total, 1);
}

TEST(Audit, BoundaryViolationCountedOnce) {
  SimConfig c;
  World w;
  w.road = c.road;
  w.vehicles = {make_hdv(0, 100, 0.5, 4, 1.7, 0)};
  w.memories.assign(1, DriverMemory{});
  w.range = FleetSpeedRange{30, 30};
  Simulation sim(c, w);
  int total = 0;
  for (int k = 0; k < 8; ++k) total += sim.step().boundary_violations;
  EXPECT_EQ(total, 1);
}

}  // namespace
}  // namespace lft
