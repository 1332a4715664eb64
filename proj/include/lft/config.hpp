#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lft/engine.hpp"

namespace lft {

/// A scenario matrix over a shared base configuration.
struct SweepSpec {
  std::vector<double> densities{50, 100, 150, 200, 250, 300, 350, 400};
  std::vector<double> hdv_rates{0.0, 0.01, 0.05, 0.1, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  std::vector<ControllerKind> controllers{ControllerKind::kPl};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SimConfig base;
  /// Simulations run at the same time.
  int workers = 1;
  /// Trajectory decimation; 0 disables the log.
  int traj_every = 0;
  bool write_grid = false;

  void validate() const;
  std::size_t cell_count() const;
  /// Cells in output order: controller, density, rate, seed.
  std::vector<SimConfig> cells() const;
};

/// Applies one `key = value` setting. Lists are comma separated or written
/// as start:stop:step. Throws ConfigError naming the key.
void apply_setting(SweepSpec& spec, std::string_view key, std::string_view value);

/// Parses a key=value document ('#' starts a comment) on top of `spec`.
void apply_config_text(SweepSpec& spec, std::string_view text, std::string_view origin = "config");

void apply_config_file(SweepSpec& spec, const std::string& path);

/// Keys accepted by apply_setting with their accepted ranges, for --help.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Every setting that influences a run, one `key=value` per line, numbers in
/// shortest round-trip form. Worker counts are left out.
std::string canonical_config(const SimConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

/// 16 hex digits of fnv1a64(canonical_config(config)).
std::string config_hash(const SimConfig& config);

/// e.g. "pl_d200_h0.2_s1".
std::string scenario_id(const SimConfig& config);

}  // namespace lft
