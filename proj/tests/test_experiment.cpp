#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "traceguard/experiment.hpp"

using namespace traceguard;
namespace fs = std::filesystem;

namespace {

const char* kMiniSpec =
    "schema = 1\n"
    "master_seed = 3\n"
    "seeds = 2\n"
    "folds = 3\n"
    "duration = 60\n"
    "benign_duration = 120\n"
    "malware_start = 10\n"
    "window_sizes = 2, 5\n"
    "feature_sets = net, both\n"
    "families = keylogger\n"
    "keylogger_intervals = 0.5, 1\n";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("spec parsing applies defaults and rejects junk") {
  std::istringstream is(kMiniSpec);
  const GridSpec spec = GridSpec::parse(is, "mini");
  CHECK(spec.master_seed == 3);
  CHECK(spec.seeds == 2);
  CHECK(spec.window_sizes == std::vector<double>{2, 5});
  CHECK(spec.feature_sets ==
        std::vector<FeatureSet>{FeatureSet::NetworkOnly, FeatureSet::Combined});
  REQUIRE(spec.family_intervals.count(MalwareFamily::Keylogger) == 1);
  CHECK(spec.family_intervals.at(MalwareFamily::Keylogger) ==
        std::vector<double>{0.5, 1});
  CHECK(spec.pipeline.svm.nu == 0.05);

  std::istringstream bad("schema = 1\nfamilies = werewolf\n");
  CHECK_THROWS_AS(GridSpec::parse(bad, "bad"), ConfigError);
  std::istringstream bad2("schema = 7\n");
  CHECK_THROWS_WITH_AS(GridSpec::parse(bad2, "bad2"), doctest::Contains("schema"),
                       ConfigError);
}

TEST_CASE("cell keys are canonical and sortable") {
  CellKey k;
  k.family = MalwareFamily::Ransomware;
  k.exfil_interval = 15;
  k.window_L = 2.5;
  k.feature_set = FeatureSet::SyscallsOnly;
  CHECK(k.str() == "ransomware_i15_L2.5_sys");
}

TEST_CASE("mini grid runs, reports round-trip, rerun is byte-identical") {
  std::istringstream is(kMiniSpec);
  const GridSpec spec = GridSpec::parse(is, "mini");
  const fs::path dir1 = fs::temp_directory_path() / "tg_grid_a";
  const fs::path dir2 = fs::temp_directory_path() / "tg_grid_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  const EvalReport r1 = run_grid(spec, dir1.string(), 4);
  REQUIRE(r1.cells.size() == 8);  // 1 family x 2 intervals x 2 windows x 2 sets
  for (const auto& c : r1.cells) {
    INFO(c.key.str(), ": ", c.error);
    CHECK_FALSE(c.failed);
    CHECK(c.fold_aucs.size() == 6);  // 2 seeds x 3 folds
    CHECK(c.auc_mean >= 0.0);
    CHECK(c.auc_mean <= 1.0);
    CHECK(fs::exists(dir1 / "models" / (c.key.str() + ".model")));
    CHECK(fs::exists(dir1 / "roc" / (c.key.str() + ".csv")));
  }
  CHECK(fs::exists(dir1 / "report.csv"));
  CHECK(fs::exists(dir1 / "report.json"));

  // Byte-identical rerun (same master seed).
  const EvalReport r2 = run_grid(spec, dir2.string(), 2);
  CHECK(slurp(dir1 / "report.csv") == slurp(dir2 / "report.csv"));
  CHECK(slurp(dir1 / "report.json") == slurp(dir2 / "report.json"));
  for (const auto& c : r1.cells) {
    CHECK(slurp(dir1 / "models" / (c.key.str() + ".model")) ==
          slurp(dir2 / "models" / (c.key.str() + ".model")));
  }
  for (const auto& e1 : fs::directory_iterator(dir1 / "traces"))
    CHECK(slurp(e1.path()) == slurp(dir2 / "traces" / e1.path().filename()));

  // CSV report reader recovers the headline metrics.
  std::ifstream csv(dir1 / "report.csv");
  const EvalReport back = read_report_csv(csv);
  REQUIRE(back.cells.size() == r1.cells.size());
  for (std::size_t i = 0; i < back.cells.size(); ++i) {
    CHECK(back.cells[i].key.str() == r1.cells[i].key.str());
    CHECK(back.cells[i].auc_mean == doctest::Approx(r1.cells[i].auc_mean).epsilon(1e-12));
  }

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("different master seed changes the artifacts") {
  std::istringstream is(kMiniSpec);
  GridSpec spec = GridSpec::parse(is, "mini");
  spec.window_sizes = {5};
  spec.feature_sets = {FeatureSet::NetworkOnly};
  spec.family_intervals[MalwareFamily::Keylogger] = {1};
  const fs::path dir1 = fs::temp_directory_path() / "tg_grid_c";
  const fs::path dir2 = fs::temp_directory_path() / "tg_grid_d";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  run_grid(spec, dir1.string(), 1);
  spec.master_seed = 4;
  run_grid(spec, dir2.string(), 1);
  CHECK(slurp(dir1 / "report.csv") != slurp(dir2 / "report.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
