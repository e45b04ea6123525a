#ifndef TRACEGUARD_EXPERIMENT_HPP
#define TRACEGUARD_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "traceguard/eval.hpp"
#include "traceguard/scenario.hpp"

namespace traceguard {

// Declarative experiment grid: families x exfiltration intervals x window
// sizes x feature sets, averaged over seeded repetitions.
struct GridSpec {
  std::uint64_t master_seed = 1;
  int seeds = 5;
  int folds = 5;
  double trace_duration = 60.0;         // infected trace length
  double benign_duration = 300.0;       // benign training trace length
  double malware_start = 10.0;
  std::vector<double> window_sizes;
  std::vector<FeatureSet> feature_sets;
  int ngram_n = 2;
  double bin_m = 1.0;
  int label_min_events = 1;
  std::map<MalwareFamily, std::vector<double>> family_intervals;
  PipelineConfig pipeline;
  BenignProfile benign;
  MalwareSpec malware_base;  // family/interval overridden per cell

  static GridSpec parse(std::istream& is, const std::string& source_name);
  static GridSpec parse_file(const std::string& path);
};

struct CellKey {
  MalwareFamily family = MalwareFamily::Keylogger;
  double exfil_interval = 0.0;
  double window_L = 0.0;
  FeatureSet feature_set = FeatureSet::Combined;

  std::string str() const;  // canonical "<family>_i<interval>_L<window>_<set>"
  bool operator<(const CellKey& o) const { return str() < o.str(); }
};

struct CellResult {
  CellKey key;
  bool failed = false;
  std::string error;
  std::vector<double> fold_aucs;  // all seeds x folds
  double auc_mean = 0.0;
  double auc_std = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
  RocCurve pooled_roc;
};

struct EvalReport {
  GridSpec spec;
  std::vector<CellResult> cells;  // canonical key order
};

// Runs every cell (deterministic per-cell seeds derived from the master seed
// and cell key), writes traces/models/ROC points/report files under out_dir,
// and returns the report. Cell failures are recorded; the grid continues.
EvalReport run_grid(const GridSpec& spec, const std::string& out_dir, int jobs = 1);

void write_report_csv(const EvalReport& report, std::ostream& os);
void write_report_json(const EvalReport& report, std::ostream& os);
EvalReport read_report_csv(std::istream& is);  // cells + headline metrics only

}  // namespace traceguard

#endif  // TRACEGUARD_EXPERIMENT_HPP
