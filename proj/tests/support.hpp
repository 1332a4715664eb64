#pragma once

#include <cmath>
#include <vector>

#include "lft/core.hpp"

namespace lft::test {

inline Vehicle make_vehicle(int id, double x, double y, double length = 4.0, double width = 1.7,
                            double vx = 0.0, VehicleClass cls = VehicleClass::kCav,
                            double v_des = 30.0, double tau = 0.5) {
  Vehicle v;
  v.spec.id = id;
  v.spec.cls = cls;
  v.spec.length_m = length;
  v.spec.width_m = width;
  v.spec.v_des = v_des;
  v.spec.tau_s = tau;
  v.state.x = x;
  v.state.y = y;
  v.state.vx = vx;
  return v;
}

inline Vehicle make_hdv(int id, double x, double y, double length = 4.0, double width = 1.7,
                        double vx = 0.0, double v_des = 30.0, double tau = 1.5) {
  return make_vehicle(id, x, y, length, width, vx, VehicleClass::kHdv, v_des, tau);
}

/// Relative closeness used for pinned values.
inline bool close_rel(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool close_1e9(double a, double b) { return close_rel(a, b); }

}  // namespace lft::test

#define EXPECT_REL(actual, expected) EXPECT_PRED2(::lft::test::close_1e9, (actual), (expected))
