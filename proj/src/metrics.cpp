#include "lft/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace lft {

void RunningStats::merge(const RunningStats& o) {
  if (o.count_ == 0) return;
  if (count_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_);
  const double d = o.mean_ - mean_;
  count_ += o.count_;
  mean_ += d * nb / (na + nb);
  m2_ += o.m2_ + d * d * na * nb / (na + nb);
}

double RunningStats::stddev() const {
  if (count_ == 0) return 0.0;
  return std::sqrt(std::max(0.0, m2_ / static_cast<double>(count_)));
}

void Histogram::add(double v) {
  const auto bins = static_cast<std::ptrdiff_t>(counts.size());
  auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / bin_width()));
  // Samples outside [lo, hi) land in the edge bins.
  b = std::clamp<std::ptrdiff_t>(b, 0, bins - 1);
  ++counts[static_cast<std::size_t>(b)];
}

std::optional<double> ttc(double gap_m, double v_follower, double v_leader) {
  const double closing = v_follower - v_leader;
  if (!(closing > 0.0) || gap_m < 0.0) return std::nullopt;
  return gap_m / closing;
}

std::optional<double> ttc_cdf(std::span<const double> samples, double threshold) {
  if (samples.empty()) return std::nullopt;
  const auto below = std::count_if(samples.begin(), samples.end(),
                                   [threshold](double s) { return s < threshold; });
  return 100.0 * static_cast<double>(below) / static_cast<double>(samples.size());
}

std::optional<double> TtcCounter::cdf_1_5() const {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(below_1_5) / static_cast<double>(total);
}

std::optional<double> TtcCounter::cdf_3_0() const {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(below_3_0) / static_cast<double>(total);
}

SpaceTimeGrid::SpaceTimeGrid(double ring_length_m, double dx_m, double dt_s)
    : dx_(dx_m), dt_(dt_s), nx_(static_cast<std::size_t>(std::ceil(ring_length_m / dx_m - 1e-9))) {
  nx_ = std::max<std::size_t>(nx_, 1);
}

void SpaceTimeGrid::add(double t_s, double x_m, double vx) {
  const auto tb = static_cast<std::size_t>(std::max(0.0, std::floor(t_s / dt_)));
  const auto xb = std::min(nx_ - 1, static_cast<std::size_t>(std::max(0.0, std::floor(x_m / dx_))));
  const std::size_t cell = tb * nx_ + xb;
  if (cell >= sum_.size()) {
    sum_.resize((tb + 1) * nx_, 0.0);
    count_.resize((tb + 1) * nx_, 0);
  }
  sum_[cell] += vx;
  ++count_[cell];
}

std::vector<SpaceTimeGrid::Cell> SpaceTimeGrid::cells() const {
  std::vector<Cell> out;
  for (std::size_t c = 0; c < sum_.size(); ++c) {
    if (count_[c] == 0) continue;
    out.push_back({static_cast<double>(c / nx_) * dt_, static_cast<double>(c % nx_) * dx_,
                   sum_[c] / static_cast<double>(count_[c]), count_[c]});
  }
  return out;
}

double SpaceTimeGrid::speed_stddev(double t_from_s) const {
  RunningStats stats;
  for (const Cell& c : cells()) {
    if (c.t_bin_s + 1e-9 >= t_from_s) stats.add(c.mean_speed);
  }
  return stats.stddev();
}

MetricsFrame::MetricsFrame(const RoadGeometry& road, std::size_t vehicles, double dt_s,
                           const MetricsParams& params)
    : road_(road),
      dt_(dt_s),
      params_(params),
      prev_ax_(vehicles, 0.0),
      prev_ay_(vehicles, 0.0),
      grid_(road.length_m, params.grid_dx_m, params.grid_dt_s) {}

void MetricsFrame::record_ttc(double t_s, std::span<const std::optional<double>> samples) {
  const bool in_window = t_s + 1e-9 >= params_.warmup_s || no_warmup_window_;
  for (const auto& s : samples) {
    if (!s) continue;
    ttc_all_.add(*s);
    if (in_window) ttc_steady_.add(*s);
  }
}

void MetricsFrame::record_state(double t_s, Fleet fleet, int crossings, int collisions,
                                int boundary_violations) {
  ++steps_;
  last_t_ = t_s;
  collisions_ += collisions;
  boundary_violations_ += boundary_violations;

  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const VehicleState& s = fleet[i].state;
    ComfortStats& c = fleet[i].is_cav() ? cav_comfort_ : hdv_comfort_;
    c.ax.add(s.ax);
    c.ay.add(s.ay);
    c.jx.add((s.ax - prev_ax_[i]) / dt_);
    c.jy.add((s.ay - prev_ay_[i]) / dt_);
    prev_ax_[i] = s.ax;
    prev_ay_[i] = s.ay;
    grid_.add(t_s, s.x, s.vx);
  }

  if (!steady(t_s)) return;
  crossings_ += crossings;
  ++steady_steps_;
  if (fleet.empty()) return;
  double vx_sum = 0.0;
  for (const Vehicle& v : fleet) {
    vx_sum += v.state.vx;
    (v.is_cav() ? lat_cav_ : lat_hdv_).add(std::abs(v.state.vy));
  }
  speed_sum_ += vx_sum / static_cast<double>(fleet.size());
}

MetricsSummary MetricsFrame::summary(double density_veh_km) const {
  MetricsSummary s;
  s.steps = steps_;
  const double window = no_warmup_window_ ? last_t_ : last_t_ - params_.warmup_s;
  if (window > 0.0) s.flow_veh_h = static_cast<double>(crossings_) * 3600.0 / window;
  if (steady_steps_ > 0) s.mean_speed_m_s = speed_sum_ / static_cast<double>(steady_steps_);
  s.flow_density_speed_veh_h = flow_from_density_speed(density_veh_km, s.mean_speed_m_s);
  if (lat_cav_.count() > 0) s.mean_lat_speed_cav = lat_cav_.mean();
  if (lat_hdv_.count() > 0) s.mean_lat_speed_hdv = lat_hdv_.mean();
  s.ttc_cdf_1_5_pct = ttc_all_.cdf_1_5();
  s.ttc_cdf_3_0_pct = ttc_all_.cdf_3_0();
  s.ttc_cdf_1_5_pct_steady = ttc_steady_.cdf_1_5();
  s.ttc_cdf_3_0_pct_steady = ttc_steady_.cdf_3_0();
  s.sigma_ax = cav_comfort_.ax.stats.stddev();
  s.sigma_ay = cav_comfort_.ay.stats.stddev();
  s.sigma_jx = cav_comfort_.jx.stats.stddev();
  s.sigma_jy = cav_comfort_.jy.stats.stddev();
  s.collisions = collisions_;
  s.boundary_violations = boundary_violations_;
  s.grid_speed_std = grid_.speed_stddev(no_warmup_window_ ? 0.0 : params_.warmup_s);
  return s;
}

double flow_from_density_speed(double density_veh_km, double mean_speed_m_s) {
  return density_veh_km * mean_speed_m_s * 3.6;
}

double mean_abs(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += std::abs(v);
  return sum / static_cast<double>(values.size());
}

}  // namespace lft
