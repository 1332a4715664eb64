#include "lft/output.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace lft {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "scenario_id",     "controller",          "density_veh_km",  "hdv_rate",
      "seed",            "flow_veh_h",          "flow_density_speed_veh_h",
      "mean_speed_m_s",  "mean_lat_speed_cav",  "mean_lat_speed_hdv",
      "ttc_cdf_1_5_pct", "ttc_cdf_3_0_pct",     "sigma_ax",        "sigma_ay",
      "sigma_jx",        "sigma_jy",            "collisions",      "boundary_violations",
      "config_hash"};
  return cols;
}

const std::vector<std::string>& cell_columns() {
  static const std::vector<std::string> cols = [] {
    auto c = summary_columns();
    for (const char* extra :
         {"ttc_cdf_1_5_pct_steady", "ttc_cdf_3_0_pct_steady", "grid_speed_std", "cav_accel_limit_hits",
          "cav_jerk_limit_hits", "standstill_floors", "vehicles", "hdvs", "steps"}) {
      c.emplace_back(extra);
    }
    return c;
  }();
  return cols;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

std::vector<std::string> summary_fields(const SimConfig& config, const MetricsSummary& s) {
  return {scenario_id(config),
          std::string(to_string(config.controller)),
          format_number(config.density_veh_km),
          format_number(config.hdv_rate),
          std::to_string(config.seed),
          format_number(s.flow_veh_h),
          format_number(s.flow_density_speed_veh_h),
          format_number(s.mean_speed_m_s),
          format_number(s.mean_lat_speed_cav),
          format_number(s.mean_lat_speed_hdv),
          format_number(s.ttc_cdf_1_5_pct),
          format_number(s.ttc_cdf_3_0_pct),
          format_number(s.sigma_ax),
          format_number(s.sigma_ay),
          format_number(s.sigma_jx),
          format_number(s.sigma_jy),
          std::to_string(s.collisions),
          std::to_string(s.boundary_violations),
          config_hash(config)};
}

std::vector<std::string> cell_fields(const SimConfig& config, const RunResult& r) {
  auto f = summary_fields(config, r.summary);
  f.push_back(format_number(r.summary.ttc_cdf_1_5_pct_steady));
  f.push_back(format_number(r.summary.ttc_cdf_3_0_pct_steady));
  f.push_back(format_number(r.summary.grid_speed_std));
  f.push_back(std::to_string(r.limits.accel));
  f.push_back(std::to_string(r.limits.jerk));
  f.push_back(std::to_string(r.limits.standstill));
  f.push_back(std::to_string(r.vehicles));
  f.push_back(std::to_string(r.hdvs));
  f.push_back(std::to_string(r.summary.steps));
  return f;
}

TrajectoryWriter::TrajectoryWriter(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw std::runtime_error("cannot write '" + path + "': " + std::strerror(errno));
  std::fputs("t_s,veh_id,class,x_m,y_m,vx_m_s,vy_m_s,ax_m_s2,ay_m_s2\n", file_);
}

TrajectoryWriter::~TrajectoryWriter() {
  if (file_) std::fclose(file_);
}

void TrajectoryWriter::write(const World& world, double t_s) {
  for (const Vehicle& v : world.vehicles) {
    const VehicleState& s = v.state;
    std::fprintf(file_, "%.6g,%d,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", t_s, v.spec.id,
                 v.is_cav() ? "cav" : "hdv", s.x, s.y, s.vx, s.vy, s.ax, s.ay);
  }
}

void TrajectoryWriter::close() {
  if (!file_) return;
  const bool failed = std::fclose(file_) != 0;
  file_ = nullptr;
  if (failed) throw std::runtime_error("cannot finish '" + path_ + "'");
}

void write_grid_csv(const std::string& path, const SpaceTimeGrid& grid) {
  std::string text = "t_bin_s,x_bin_m,mean_speed_m_s,sample_count\n";
  for (const auto& c : grid.cells()) {
    text += format_number(c.t_bin_s) + ',' + format_number(c.x_bin_m) + ',' +
            format_number(c.mean_speed) + ',' + std::to_string(c.samples) + '\n';
  }
  write_file_atomic(path, text);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

TrajectoryMetrics metrics_from_trajectories(std::istream& in, double ring_length_m,
                                            const MetricsParams& params) {
  static const std::vector<std::string> kColumns = {"t_s",    "veh_id", "class",   "x_m",    "y_m",
                                                    "vx_m_s", "vy_m_s", "ax_m_s2", "ay_m_s2"};
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectories: empty input");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> col(kColumns.size());
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), kColumns[k]);
    if (it == header.end()) throw std::runtime_error("trajectories: missing column " + kColumns[k]);
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  struct Prev {
    double t, x, ax, ay;
  };
  struct Frame {
    double t = 0.0;
    double vx_sum = 0.0;
    std::size_t n = 0;
    int crossings = 0;
    double lat_sum[2] = {0.0, 0.0};  // hdv, cav
    std::size_t lat_n[2] = {0, 0};
  };
  std::unordered_map<std::size_t, Prev> prev;
  std::vector<Frame> frames;
  ComfortStats cav;
  TrajectoryMetrics out;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("trajectories: line " + std::to_string(line_no) + " has " +
                               std::to_string(f.size()) + " fields");
    }
    double v[9] = {};
    std::size_t id = 0;
    bool is_cav = false;
    try {
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (k == 1) id = std::stoull(f[col[k]]);
        else if (k == 2) is_cav = f[col[k]] == "cav";
        else v[k] = std::stod(f[col[k]]);
      }
    } catch (const std::exception&) {
      throw std::runtime_error("trajectories: malformed number on line " + std::to_string(line_no));
    }
    const double t = v[0], x = v[3], vx = v[5], vy = v[6], ax = v[7], ay = v[8];
    if (frames.empty() || frames.back().t != t) {
      frames.push_back({});
      frames.back().t = t;
    }
    Frame& fr = frames.back();
    fr.vx_sum += vx;
    ++fr.n;
    fr.lat_sum[is_cav] += std::abs(vy);
    ++fr.lat_n[is_cav];

    const auto it = prev.find(id);
    if (it != prev.end()) {
      const Prev& p = it->second;
      if (x < p.x - 0.5 * ring_length_m) ++fr.crossings;
      const double dt = t - p.t;
      if (is_cav && dt > 0.0) {
        cav.jx.add((ax - p.ax) / dt);
        cav.jy.add((ay - p.ay) / dt);
      }
    }
    if (is_cav) {
      cav.ax.add(ax);
      cav.ay.add(ay);
    }
    prev[id] = {t, x, ax, ay};
    ++out.samples;
  }

  out.vehicles = prev.size();
  MetricsSummary& s = out.summary;
  s.steps = frames.empty() ? 0 : static_cast<std::int64_t>(frames.size() - 1);
  if (!frames.empty()) {
    const double last_t = frames.back().t;
    const bool whole = last_t <= params.warmup_s;
    const double from = whole ? frames.front().t : params.warmup_s;
    std::int64_t crossings = 0;
    RunningStats speed, lat[2];
    for (const Frame& fr : frames) {
      // Each frame carries the crossings since the previous sample.
      if (!whole && !(fr.t > params.warmup_s)) continue;
      if (whole && &fr == &frames.front()) continue;
      crossings += fr.crossings;
      if (fr.n) speed.add(fr.vx_sum / static_cast<double>(fr.n));
      for (int c = 0; c < 2; ++c) {
        if (fr.lat_n[c]) lat[c].add(fr.lat_sum[c] / static_cast<double>(fr.lat_n[c]));
      }
    }
    if (last_t - from > 0.0) s.flow_veh_h = static_cast<double>(crossings) * 3600.0 / (last_t - from);
    s.mean_speed_m_s = speed.mean();
    const double density = static_cast<double>(out.vehicles) / (ring_length_m / 1000.0);
    s.flow_density_speed_veh_h = flow_from_density_speed(density, s.mean_speed_m_s);
    if (lat[1].count()) s.mean_lat_speed_cav = lat[1].mean();
    if (lat[0].count()) s.mean_lat_speed_hdv = lat[0].mean();
  }
  s.sigma_ax = cav.ax.stats.stddev();
  s.sigma_ay = cav.ay.stats.stddev();
  s.sigma_jx = cav.jx.stats.stddev();
  s.sigma_jy = cav.jy.stats.stddev();
  return out;
}

namespace {

/// Row of an existing cell file if its hash matches, otherwise empty.
std::optional<std::vector<std::string>> reusable_cell(const fs::path& cell_file, const std::string& hash) {
  std::ifstream in(cell_file, std::ios::binary);
  if (!in) return std::nullopt;
  std::string header, row;
  if (!std::getline(in, header) || !std::getline(in, row)) return std::nullopt;
  if (split_csv_line(header) != cell_columns()) return std::nullopt;
  auto fields = split_csv_line(row);
  if (fields.size() != cell_columns().size()) return std::nullopt;
  if (fields[summary_columns().size() - 1] != hash) return std::nullopt;
  return fields;
}

}  // namespace

SweepOutcome run_sweep(const SweepSpec& spec, const std::string& out_dir, std::ostream* log) {
  spec.validate();
  const auto cells = spec.cells();
  const fs::path root(out_dir);
  fs::create_directories(root / "cells");

  SweepOutcome outcome;
  std::vector<std::optional<std::vector<std::string>>> rows(cells.size());
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto run_cell = [&](std::size_t c) {
    const SimConfig& config = cells[c];
    const std::string id = scenario_id(config);
    const std::string hash = config_hash(config);
    const fs::path cell_file = root / "cells" / (id + ".csv");
    const fs::path run_dir = root / "runs" / id;
    const bool want_traj = spec.traj_every > 0;
    const bool want_grid = spec.write_grid;

    if (auto fields = reusable_cell(cell_file, hash)) {
      const bool files_ok = (!want_traj || fs::exists(run_dir / "trajectories.csv")) &&
                            (!want_grid || fs::exists(run_dir / "grid.csv"));
      if (files_ok) {
        std::lock_guard lock(mu);
        rows[c] = std::move(fields);
        ++outcome.reused;
        if (log) *log << "reuse " << id << '\n';
        return;
      }
    }

    try {
      if (want_traj || want_grid) {
        fs::create_directories(run_dir);
        write_file_atomic((run_dir / "config.txt").string(),
                          canonical_config(config) + "# config_hash " + hash + "\n");
      }
      std::optional<TrajectoryWriter> traj;
      RunOptions options;
      if (want_traj) {
        traj.emplace((run_dir / "trajectories.csv.part").string());
        options.sample_every = spec.traj_every;
        options.on_sample = [&traj](const World& w, double t) { traj->write(w, t); };
      }
      const RunResult result = run(config, options);
      if (traj) {
        traj->close();
        fs::rename(run_dir / "trajectories.csv.part", run_dir / "trajectories.csv");
      }
      if (want_grid) write_grid_csv((run_dir / "grid.csv").string(), result.grid);
      auto fields = cell_fields(config, result);
      write_file_atomic(cell_file.string(), join_csv(cell_columns()) + "\n" + join_csv(fields) + "\n");
      std::lock_guard lock(mu);
      rows[c] = std::move(fields);
      ++outcome.ran;
      if (log) {
        *log << "done  " << id << " flow=" << format_number(result.summary.flow_veh_h)
             << " collisions=" << result.summary.collisions << '\n';
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      outcome.failures.push_back({id, e.what()});
      if (log) *log << "FAIL  " << id << ": " << e.what() << '\n';
    }
  };

  const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(cells.size())));
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) run_cell(c);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string summary = join_csv(summary_columns()) + "\n";
  for (const auto& r : rows) {
    if (!r) continue;
    std::vector<std::string> head(r->begin(), r->begin() + static_cast<std::ptrdiff_t>(summary_columns().size()));
    summary += join_csv(head) + "\n";
  }
  write_file_atomic((root / "summary.csv").string(), summary);
  std::sort(outcome.failures.begin(), outcome.failures.end(),
            [](const CellFailure& a, const CellFailure& b) { return a.scenario_id < b.scenario_id; });
  return outcome;
}

}  // namespace lft
