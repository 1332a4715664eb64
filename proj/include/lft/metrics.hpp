#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lft/core.hpp"

namespace lft {

struct MetricsParams {
  double warmup_s = 600.0;
  double grid_dx_m = 10.0;
  double grid_dt_s = 10.0;
};

/// Streaming mean and variance (Welford, with Chan's pairwise merge).
class RunningStats {
 public:
  void add(double v) {
    ++count_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (v - mean_);
  }
  void merge(const RunningStats& o);
  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  /// Population standard deviation.
  double stddev() const;

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Histogram {
  double lo = -5.0;
  double hi = 5.0;
  std::vector<std::int64_t> counts = std::vector<std::int64_t>(100, 0);

  void add(double v);
  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

/// Time to collision, present only when the follower closes in.
std::optional<double> ttc(double gap_m, double v_follower, double v_leader);

/// Percentage of samples strictly below `threshold`; empty for no samples.
std::optional<double> ttc_cdf(std::span<const double> samples, double threshold);

/// Streaming TTC counter for the two reporting thresholds.
struct TtcCounter {
  std::int64_t total = 0;
  std::int64_t below_1_5 = 0;
  std::int64_t below_3_0 = 0;

  void add(double value) {
    ++total;
    if (value < 1.5) ++below_1_5;
    if (value < 3.0) ++below_3_0;
  }
  std::optional<double> cdf_1_5() const;
  std::optional<double> cdf_3_0() const;
};

struct AxisStats {
  RunningStats stats;
  Histogram histogram;

  void add(double v) {
    stats.add(v);
    histogram.add(v);
  }
};

/// Acceleration and jerk streams of one vehicle class.
struct ComfortStats {
  AxisStats ax;
  AxisStats ay;
  AxisStats jx;
  AxisStats jy;
};

/// Mean-speed grid over (time bin, ring position bin).
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(double ring_length_m, double dx_m, double dt_s);

  void add(double t_s, double x_m, double vx);

  struct Cell {
    double t_bin_s;
    double x_bin_m;
    double mean_speed;
    std::int64_t samples;
  };
  /// Non-empty cells ordered by time bin, then position bin.
  std::vector<Cell> cells() const;
  /// Standard deviation of cell mean speeds over cells starting at or after `t_from_s`.
  double speed_stddev(double t_from_s = 0.0) const;

  double dx() const { return dx_; }
  double dt() const { return dt_; }

 private:
  double dx_ = 10.0;
  double dt_ = 10.0;
  std::size_t nx_ = 0;
  std::vector<double> sum_;
  std::vector<std::int64_t> count_;
};

struct MetricsSummary {
  double flow_veh_h = 0.0;
  double flow_density_speed_veh_h = 0.0;
  double mean_speed_m_s = 0.0;
  std::optional<double> mean_lat_speed_cav;
  std::optional<double> mean_lat_speed_hdv;
  std::optional<double> ttc_cdf_1_5_pct;  // whole run, initialization included
  std::optional<double> ttc_cdf_3_0_pct;
  std::optional<double> ttc_cdf_1_5_pct_steady;  // after warm-up only
  std::optional<double> ttc_cdf_3_0_pct_steady;
  double sigma_ax = 0.0;  // CAVs, every step
  double sigma_ay = 0.0;
  double sigma_jx = 0.0;
  double sigma_jy = 0.0;
  std::int64_t collisions = 0;
  std::int64_t boundary_violations = 0;
  double grid_speed_std = 0.0;  // cell-speed spread after warm-up
  std::int64_t steps = 0;
};

/// Streams per-step fleet snapshots into the run aggregates.
class MetricsFrame {
 public:
  MetricsFrame(const RoadGeometry& road, std::size_t vehicles, double dt_s,
               const MetricsParams& params);

  /// TTC values of snapshot k taken at time `t_s`; empty entries are skipped.
  void record_ttc(double t_s, std::span<const std::optional<double>> samples);

  /// State after step k -> k+1 at time `t_s`.
  void record_state(double t_s, Fleet fleet, int crossings, int collisions,
                    int boundary_violations);

  MetricsSummary summary(double density_veh_km) const;

  const SpaceTimeGrid& grid() const { return grid_; }
  const ComfortStats& comfort(VehicleClass cls) const {
    return cls == VehicleClass::kCav ? cav_comfort_ : hdv_comfort_;
  }

 private:
  bool steady(double t_s) const { return t_s > params_.warmup_s || no_warmup_window_; }

  RoadGeometry road_;
  double dt_;
  MetricsParams params_;
  bool no_warmup_window_ = false;
  double last_t_ = 0.0;

  std::int64_t steps_ = 0;
  std::int64_t crossings_ = 0;
  std::int64_t steady_steps_ = 0;
  double speed_sum_ = 0.0;  // sum over steady steps of fleet-mean vx
  RunningStats lat_cav_;
  RunningStats lat_hdv_;
  TtcCounter ttc_all_;
  TtcCounter ttc_steady_;
  ComfortStats cav_comfort_;
  ComfortStats hdv_comfort_;
  std::vector<double> prev_ax_;
  std::vector<double> prev_ay_;
  std::int64_t collisions_ = 0;
  std::int64_t boundary_violations_ = 0;
  SpaceTimeGrid grid_;

 public:
  void set_run_duration(double duration_s) {
    no_warmup_window_ = duration_s <= params_.warmup_s;
  }
};

/// Flow by density times space-mean speed, veh/h.
double flow_from_density_speed(double density_veh_km, double mean_speed_m_s);

/// Mean of |vy| over a stream.
double mean_abs(std::span<const double> values);

}  // namespace lft
