#pragma once

#include <cstdio>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lft/config.hpp"
#include "lft/engine.hpp"

namespace lft {

/// Six significant digits, "%.6g".
std::string format_number(double v);
/// Empty field for an absent value.
std::string format_number(const std::optional<double>& v);

const std::vector<std::string>& summary_columns();
/// Summary columns followed by the per-cell extras.
const std::vector<std::string>& cell_columns();

std::string join_csv(const std::vector<std::string>& fields);
std::vector<std::string> split_csv_line(const std::string& line);

std::vector<std::string> summary_fields(const SimConfig& config, const MetricsSummary& summary);
std::vector<std::string> cell_fields(const SimConfig& config, const RunResult& result);

/// Streams trajectories.csv rows for every vehicle of a world snapshot.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::string& path);
  ~TrajectoryWriter();
  TrajectoryWriter(const TrajectoryWriter&) = delete;
  TrajectoryWriter& operator=(const TrajectoryWriter&) = delete;

  void write(const World& world, double t_s);
  void close();

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
};

void write_grid_csv(const std::string& path, const SpaceTimeGrid& grid);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

/// Metrics that can be rebuilt from a trajectory log alone. TTC, collisions
/// and boundary checks need vehicle footprints and stay empty.
struct TrajectoryMetrics {
  MetricsSummary summary;
  std::size_t vehicles = 0;
  std::size_t samples = 0;
};

/// Recomputes metrics from trajectories.csv content. Jerk uses the logged
/// time difference between consecutive samples of a vehicle.
TrajectoryMetrics metrics_from_trajectories(std::istream& in, double ring_length_m,
                                            const MetricsParams& params);

struct CellFailure {
  std::string scenario_id;
  std::string message;
};

struct SweepOutcome {
  std::size_t ran = 0;
  std::size_t reused = 0;
  std::vector<CellFailure> failures;
};

/// Runs every cell of the spec into `out_dir`:
///   cells/<id>.csv            one summary row plus extras
///   runs/<id>/config.txt      canonical configuration and hash
///   runs/<id>/trajectories.csv, runs/<id>/grid.csv when requested
///   summary.csv               successful rows in cell order
/// Cells whose stored hash matches are reused.
SweepOutcome run_sweep(const SweepSpec& spec, const std::string& out_dir, std::ostream* log = nullptr);

}  // namespace lft
