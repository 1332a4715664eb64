#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lft/config.hpp"
#include "lft/output.hpp"

namespace lft {
namespace {

namespace fs = std::filesystem;

std::string error_of(SweepSpec& spec, std::string_view text) {
  try {
    apply_config_text(spec, text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(Config, EmptyConfigGivesDefaultSweep) {
  SweepSpec spec;
  apply_config_text(spec, "");
  spec.validate();
  EXPECT_EQ(spec.densities.size(), 8u);
  EXPECT_EQ(spec.hdv_rates.size(), 10u);
  EXPECT_EQ(spec.controllers.size(), 1u);
  EXPECT_EQ(spec.seeds.size(), 5u);
  EXPECT_EQ(spec.cell_count(), 400u);
  EXPECT_EQ(spec.base.dt_s, 0.25);
  EXPECT_EQ(spec.base.duration_s, 3600.0);
  EXPECT_EQ(spec.base.params.cav.w_nudge, 1.0);
  EXPECT_EQ(spec.base.params.cav.w_repulse, 0.5);
}

TEST(Config, FootnotePreset) {
  SweepSpec spec;
  apply_config_text(spec, "preset = footnote\n");
  EXPECT_EQ(spec.base.params.cav.w_nudge, 1.5);
  EXPECT_EQ(spec.base.params.cav.w_repulse, 1.0);
}

TEST(Config, ErrorsNameTheKey) {
  SweepSpec spec;
  const std::string neg = error_of(spec, "density = -5");
  EXPECT_NE(neg.find("density"), std::string::npos) << neg;
  EXPECT_NE(neg.find("accepted"), std::string::npos) << neg;
  const std::string unknown = error_of(spec, "# comment\nnot_a_key = 3\n");
  EXPECT_NE(unknown.find("not_a_key"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find(":2:"), std::string::npos) << unknown;
  EXPECT_NE(error_of(spec, "controller = xyz").find("controller"), std::string::npos);
  EXPECT_NE(error_of(spec, "hdv_rate = 1.5").find("hdv_rate"), std::string::npos);
  EXPECT_NE(error_of(spec, "dt = abc").find("dt"), std::string::npos);
}

TEST(Config, ListsAndRanges) {
  SweepSpec spec;
  apply_config_text(spec, "densities = 50:400:50\nhdv_rates = 0, 0.2\ncontrollers = pl,cm,svam\nseeds = 3:5\n");
  EXPECT_EQ(spec.densities, (std::vector<double>{50, 100, 150, 200, 250, 300, 350, 400}));
  EXPECT_EQ(spec.hdv_rates, (std::vector<double>{0, 0.2}));
  EXPECT_EQ(spec.controllers.size(), 3u);
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(spec.cell_count(), 8u * 2u * 3u * 3u);
}

TEST(Config, CellOrder) {
  SweepSpec spec;
  apply_config_text(spec, "densities = 100,50\nhdv_rates = 0.2,0\ncontrollers = fam,pl\nseeds = 2,1\n");
  const auto cells = spec.cells();
  ASSERT_EQ(cells.size(), 16u);
  EXPECT_EQ(scenario_id(cells[0]), "fam_d100_h0.2_s2");
  EXPECT_EQ(scenario_id(cells[1]), "fam_d100_h0.2_s1");
  EXPECT_EQ(scenario_id(cells[2]), "fam_d100_h0_s2");
  EXPECT_EQ(scenario_id(cells[4]), "fam_d50_h0.2_s2");
  EXPECT_EQ(scenario_id(cells[8]), "pl_d100_h0.2_s2");
}

TEST(Config, HashFollowsEverySetting) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  SimConfig a;
  const std::string h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  SimConfig w = a;
  w.workers = 8;
  EXPECT_EQ(config_hash(w), h);
  // Sweep-level keys do not change a single run.
  const std::vector<std::string> sweep_only = {"workers", "run_workers", "traj_every", "write_grid", "preset"};
  for (const auto& [key, accepted] : config_keys()) {
    (void)accepted;
    if (std::find(sweep_only.begin(), sweep_only.end(), key) != sweep_only.end()) continue;
    EXPECT_NE(canonical_config(a).find(key + "="), std::string::npos) << key;
  }
  SimConfig b = a;
  b.params.cav.k_pl += 1e-12;
  EXPECT_NE(config_hash(b), h);
  b = a;
  b.seed = 2;
  EXPECT_NE(config_hash(b), h);
}

TEST(Config, CanonicalTextRoundTrips) {
  SweepSpec spec;
  apply_config_text(spec, "k_pl = 0.1\nfield_direction = radial\ndensity = 150\nhdv_rate = 0.3\nseed = 9\n");
  const SimConfig c = spec.cells().front();
  SweepSpec again;
  apply_config_text(again, canonical_config(c));
  EXPECT_EQ(canonical_config(again.cells().front()), canonical_config(c));
}

class SweepDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("lft_sweep_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static SweepSpec small() {
    SweepSpec spec;
    apply_config_text(spec,
                      "densities = 50:400:50\nhdv_rates = 0.2\ncontrollers = pl,fam\nseeds = 1:5\n"
                      "duration = 5\nwarmup = 1\n");
    return spec;
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  fs::path dir_;
};

TEST_F(SweepDir, SummaryRowsAndResume) {
  const SweepSpec spec = small();
  const auto first = run_sweep(spec, dir_.string());
  EXPECT_EQ(first.ran, 80u);
  EXPECT_TRUE(first.failures.empty());
  std::istringstream rows(slurp(dir_ / "summary.csv"));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(split_csv_line(line), summary_columns());
  int n = 0;
  while (std::getline(rows, line)) {
    EXPECT_EQ(split_csv_line(line).size(), summary_columns().size());
    ++n;
  }
  EXPECT_EQ(n, 80);

  const std::string before = slurp(dir_ / "summary.csv");
  const auto second = run_sweep(spec, dir_.string());
  EXPECT_EQ(second.ran, 0u);
  EXPECT_EQ(second.reused, 80u);
  EXPECT_EQ(slurp(dir_ / "summary.csv"), before);

  SweepSpec changed = spec;
  changed.base.params.cav.k_pl = 0.03;
  const auto third = run_sweep(changed, dir_.string());
  EXPECT_EQ(third.ran, 80u);
  EXPECT_EQ(third.reused, 0u);
}

TEST_F(SweepDir, WorkerCountGivesIdenticalSummary) {
  SweepSpec spec = small();
  spec.workers = 1;
  run_sweep(spec, (dir_ / "one").string());
  spec.workers = 8;
  run_sweep(spec, (dir_ / "eight").string());
  EXPECT_EQ(slurp(dir_ / "one" / "summary.csv"), slurp(dir_ / "eight" / "summary.csv"));
}

TEST_F(SweepDir, RunFilesAndMissingFilesForceRecompute) {
  SweepSpec spec;
  apply_config_text(spec, "densities = 100\nhdv_rates = 0.1\nseeds = 1\nduration = 10\nwarmup = 2\ntraj_every = 4\nwrite_grid = 1\n");
  run_sweep(spec, dir_.string());
  const std::string id = scenario_id(spec.cells().front());
  const fs::path run_dir = dir_ / "runs" / id;
  ASSERT_TRUE(fs::exists(run_dir / "trajectories.csv"));
  ASSERT_TRUE(fs::exists(run_dir / "grid.csv"));
  const std::string sidecar = slurp(run_dir / "config.txt");
  EXPECT_NE(sidecar.find(config_hash(spec.cells().front())), std::string::npos);
  // The sidecar is itself a valid config for the same run.
  SweepSpec back;
  apply_config_text(back, sidecar);
  EXPECT_EQ(config_hash(back.cells().front()), config_hash(spec.cells().front()));

  // Header plus 100 vehicles at t = 0, 1, ..., 10.
  std::istringstream traj(slurp(run_dir / "trajectories.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(traj, line)) ++lines;
  EXPECT_EQ(lines, 1 + 100 * 11);

  fs::remove(run_dir / "grid.csv");
  const auto again = run_sweep(spec, dir_.string());
  EXPECT_EQ(again.ran, 1u);
  EXPECT_TRUE(fs::exists(run_dir / "grid.csv"));
}

TEST(Output, NumberFormatting) {
  EXPECT_EQ(format_number(16632.0), "16632");
  EXPECT_EQ(format_number(0.1333333333), "0.133333");
  EXPECT_EQ(format_number(std::optional<double>{}), "");
  EXPECT_EQ(join_csv({"a", "", "c"}), "a,,c");
  EXPECT_EQ(split_csv_line("a,,c\r"), (std::vector<std::string>{"a", "", "c"}));
}

}  // namespace
}  // namespace lft
