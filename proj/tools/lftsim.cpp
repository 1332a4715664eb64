// lftsim: single runs, sweeps and metric recomputation from trajectory logs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lft/config.hpp"
#include "lft/output.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> density, hdv_rate, controller, seed, seeds, duration, dt, traj_every, workers;
  std::vector<std::string> sets;
  std::string out_dir = "out";
};

void add_common(CLI::App* app, Flags& f, bool lists) {
  const char* suffix = lists ? " (comma list or start:stop:step)" : "";
  app->add_option("--config", f.config, "key = value file applied before the flags");
  app->add_option("--density", f.density, std::string("vehicles per km") + suffix);
  app->add_option("--hdv-rate", f.hdv_rate, std::string("share of human drivers in [0, 1]") + suffix);
  app->add_option("--controller", f.controller, "pl, cm, nscm, fam or svam" + std::string(lists ? " (comma list)" : ""));
  app->add_option("--seed", f.seed, "random seed");
  if (lists) app->add_option("--seeds", f.seeds, "seed list, e.g. 1,2,3 or 1:5");
  app->add_option("--duration", f.duration, "simulated seconds");
  app->add_option("--dt", f.dt, "step length in seconds");
  app->add_option("--out-dir", f.out_dir, "output directory")->capture_default_str();
  app->add_option("--traj-every", f.traj_every, "trajectory decimation in steps, 0 disables");
  app->add_option("--workers", f.workers,
                  lists ? "runs executed in parallel" : "threads inside the run");
  app->add_option("--set", f.sets, "extra key=value override, repeatable");
}

lft::SweepSpec resolve(const Flags& f, bool single) {
  lft::SweepSpec spec;
  if (single) {
    spec.densities = {spec.base.density_veh_km};
    spec.hdv_rates = {spec.base.hdv_rate};
    spec.controllers = {spec.base.controller};
    spec.seeds = {spec.base.seed};
    spec.traj_every = 4;
    spec.write_grid = true;
  }
  if (!f.config.empty()) lft::apply_config_file(spec, f.config);
  auto put = [&spec](const char* key, const std::optional<std::string>& v) {
    if (v) lft::apply_setting(spec, key, *v);
  };
  put("density", f.density);
  put("hdv_rate", f.hdv_rate);
  put("controller", f.controller);
  put("seed", f.seed);
  put("seeds", f.seeds);
  put("duration", f.duration);
  put("dt", f.dt);
  put("traj_every", f.traj_every);
  put(single ? "run_workers" : "workers", f.workers);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw lft::ConfigError("--set: expected key=value, got '" + kv + "'");
    lft::apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (single && spec.cell_count() != 1) {
    throw lft::ConfigError("run: density, hdv_rate, controller and seed must each have one value");
  }
  spec.validate();
  return spec;
}

int report(const lft::SweepOutcome& outcome, const std::string& out_dir) {
  std::cerr << "ran " << outcome.ran << ", reused " << outcome.reused << ", failed "
            << outcome.failures.size() << "; summary in " << out_dir << "/summary.csv\n";
  for (const auto& f : outcome.failures) std::cerr << "failed " << f.scenario_id << ": " << f.message << '\n';
  return outcome.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-free ring road traffic simulator"};
  app.require_subcommand(1);

  Flags run_flags, sweep_flags;
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario");
  add_common(run_cmd, run_flags, false);
  auto* sweep_cmd = app.add_subcommand("sweep", "simulate a density x rate x controller x seed matrix");
  add_common(sweep_cmd, sweep_flags, true);
  bool quiet = false;
  sweep_cmd->add_flag("--quiet", quiet, "no per-cell progress lines");

  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from a trajectory log");
  std::string traj_path, metrics_config, metrics_out;
  std::optional<double> warmup;
  metrics_cmd->add_option("trajectories", traj_path, "trajectories.csv")->required();
  metrics_cmd->add_option("--config", metrics_config, "configuration used for the run (ring length, warm-up)");
  metrics_cmd->add_option("--warmup", warmup, "warm-up seconds excluded from steady metrics");
  metrics_cmd->add_option("--out", metrics_out, "write the CSV here instead of stdout");

  app.add_subcommand("keys", "list configuration keys and accepted ranges");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const auto spec = resolve(run_flags, true);
      const auto outcome = lft::run_sweep(spec, run_flags.out_dir, nullptr);
      std::ifstream in(run_flags.out_dir + "/summary.csv");
      std::cout << in.rdbuf();
      return report(outcome, run_flags.out_dir);
    }
    if (*sweep_cmd) {
      const auto spec = resolve(sweep_flags, false);
      std::cerr << spec.cell_count() << " cells\n";
      const auto outcome = lft::run_sweep(spec, sweep_flags.out_dir, quiet ? nullptr : &std::cerr);
      return report(outcome, sweep_flags.out_dir);
    }
    if (*metrics_cmd) {
      lft::SweepSpec spec;
      if (!metrics_config.empty()) lft::apply_config_file(spec, metrics_config);
      if (warmup) lft::apply_setting(spec, "warmup", std::to_string(*warmup));
      std::ifstream in(traj_path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot read '" + traj_path + "'");
      const auto m = lft::metrics_from_trajectories(in, spec.base.road.length_m, spec.base.metrics);
      const auto& s = m.summary;
      std::string text =
          "vehicles,samples,flow_veh_h,flow_density_speed_veh_h,mean_speed_m_s,mean_lat_speed_cav,"
          "mean_lat_speed_hdv,sigma_ax,sigma_ay,sigma_jx,sigma_jy\n";
      text += lft::join_csv({std::to_string(m.vehicles), std::to_string(m.samples),
                             lft::format_number(s.flow_veh_h), lft::format_number(s.flow_density_speed_veh_h),
                             lft::format_number(s.mean_speed_m_s), lft::format_number(s.mean_lat_speed_cav),
                             lft::format_number(s.mean_lat_speed_hdv), lft::format_number(s.sigma_ax),
                             lft::format_number(s.sigma_ay), lft::format_number(s.sigma_jx),
                             lft::format_number(s.sigma_jy)}) +
              "\n";
      if (metrics_out.empty()) {
        std::cout << text;
      } else {
        lft::write_file_atomic(metrics_out, text);
      }
      return 0;
    }
    for (const auto& [key, accepted] : lft::config_keys()) std::cout << key << "  " << accepted << '\n';
    return 0;
  } catch (const lft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
