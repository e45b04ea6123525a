#include "traceguard/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "traceguard/rng.hpp"
#include "traceguard/simulator.hpp"
#include "traceguard/trace_io.hpp"

namespace traceguard {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string CellKey::str() const {
  return std::string(family_name(family)) + "_i" + fmt_g(exfil_interval) + "_L" +
         fmt_g(window_L) + "_" + feature_set_name(feature_set);
}

GridSpec GridSpec::parse(std::istream& is, const std::string& source_name) {
  const KeyValueDoc doc = KeyValueDoc::parse(is, source_name);
  if (doc.get_int("schema", 1) != 1)
    throw ConfigError(source_name + ": unsupported schema version");
  GridSpec g;
  g.master_seed = static_cast<std::uint64_t>(doc.get_int("master_seed", 1));
  g.seeds = static_cast<int>(doc.get_int("seeds", 5));
  g.folds = static_cast<int>(doc.get_int("folds", 5));
  g.trace_duration = doc.get_double("duration", 60.0);
  g.benign_duration = doc.get_double("benign_duration", 300.0);
  g.malware_start = doc.get_double("malware_start", 10.0);
  g.window_sizes = doc.get_double_list("window_sizes");
  if (g.window_sizes.empty()) g.window_sizes = {5.0};
  for (const auto& s : doc.get_list("feature_sets")) g.feature_sets.push_back(parse_feature_set(s));
  if (g.feature_sets.empty())
    g.feature_sets = {FeatureSet::SyscallsOnly, FeatureSet::NetworkOnly, FeatureSet::Combined};
  g.ngram_n = static_cast<int>(doc.get_int("ngram", 2));
  g.bin_m = doc.get_double("bin", 1.0);
  g.label_min_events = static_cast<int>(doc.get_int("label_min_events", 1));
  auto families = doc.get_list("families");
  if (families.empty()) families = {"keylogger", "ransomware", "cryptominer"};
  for (const auto& fam : families) {
    const MalwareFamily f = parse_family(fam);
    auto intervals = doc.get_double_list(fam + "_intervals");
    if (intervals.empty()) throw ConfigError(source_name + ": missing " + fam + "_intervals");
    g.family_intervals[f] = intervals;
  }
  g.pipeline.svm.nu = doc.get_double("nu", 0.05);
  g.pipeline.svm.gamma = doc.get_double("gamma", 0.0);
  const std::string kernel = doc.get("kernel", "rbf");
  if (kernel == "rbf") g.pipeline.svm.kernel = KernelKind::Rbf;
  else if (kernel == "linear") g.pipeline.svm.kernel = KernelKind::Linear;
  else throw ConfigError(source_name + ": unknown kernel '" + kernel + "'");
  g.pipeline.svm.tol = doc.get_double("tol", 1e-6);
  g.pipeline.svm.max_iter = doc.get_int("max_iter", 100000);
  g.pipeline.pca_variance = doc.get_double("pca_variance", 0.95);
  g.pipeline.threshold = doc.get_double("threshold", 0.0);
  g.benign = default_benign_profile();
  return g;
}

GridSpec GridSpec::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open experiment spec: " + path);
  return parse(is, path);
}

namespace {

double family_exfil_size(MalwareFamily f) {
  switch (f) {
    case MalwareFamily::Keylogger: return 4;        // keypresses per packet
    case MalwareFamily::Ransomware: return 32768;   // file-size scale, bytes
    case MalwareFamily::Cryptominer: return 64;     // hash payload scale
  }
  return 16;
}

struct SeedData {
  // Per (family, interval, window, seed): featurized matrices sharing one
  // vocabulary built over both traces.
  FeatureMatrix benign_sys, benign_net, mal_sys, mal_net;
};

FeatureMatrix malicious_rows_only(const FeatureMatrix& fm) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < fm.rows; ++r)
    if (fm.labels[r] == Label::Malicious) rows.push_back(r);
  return select_rows(fm, rows);
}

void pick_feature_matrices(const SeedData& sd, FeatureSet set, FeatureMatrix& benign_out,
                           FeatureMatrix& mal_out) {
  switch (set) {
    case FeatureSet::SyscallsOnly:
      benign_out = sd.benign_sys;
      mal_out = malicious_rows_only(sd.mal_sys);
      return;
    case FeatureSet::NetworkOnly:
      benign_out = sd.benign_net;
      mal_out = malicious_rows_only(sd.mal_net);
      return;
    case FeatureSet::Combined:
      benign_out = combine(sd.benign_sys, sd.benign_net);
      mal_out = malicious_rows_only(combine(sd.mal_sys, sd.mal_net));
      return;
  }
  throw ConfigError("bad feature set");
}

}  // namespace

EvalReport run_grid(const GridSpec& spec, const std::string& out_dir, int jobs) {
  if (spec.seeds < 1) throw ConfigError("seeds: must be >= 1");
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/traces");
  fs::create_directories(out_dir + "/models");
  fs::create_directories(out_dir + "/roc");

  // Simulate and persist all traces up front (deterministic order).
  std::vector<Trace> benign_traces;
  for (int s = 0; s < spec.seeds; ++s) {
    Scenario sc;
    sc.duration = spec.benign_duration;
    sc.benign = spec.benign;
    sc.seed = derive_seed(spec.master_seed, "trace:benign:s" + std::to_string(s));
    sc.id = "benign_s" + std::to_string(s);
    Trace t = simulate(sc);
    write_trace_file(t, out_dir + "/traces/" + sc.id + ".trace");
    benign_traces.push_back(std::move(t));
  }
  std::map<std::string, Trace> infected;  // key: family_i<interval>_s<seed>
  for (const auto& [family, intervals] : spec.family_intervals) {
    for (double interval : intervals) {
      for (int s = 0; s < spec.seeds; ++s) {
        Scenario sc;
        sc.duration = spec.trace_duration;
        sc.benign = spec.benign;
        sc.malware_start = spec.malware_start;
        MalwareSpec m = spec.malware_base;
        m.family = family;
        m.exfil_interval = interval;
        m.exfil_size = family_exfil_size(family);
        sc.malware = m;
        const std::string key = std::string(family_name(family)) + "_i" + fmt_g(interval) +
                                "_s" + std::to_string(s);
        sc.id = key;
        sc.seed = derive_seed(spec.master_seed, "trace:" + key);
        Trace t = simulate(sc);
        write_trace_file(t, out_dir + "/traces/" + key + ".trace");
        infected.emplace(key, std::move(t));
      }
    }
  }

  // Featurize every (family, interval, window, seed) tuple once.
  std::map<std::string, SeedData> cache;
  for (const auto& [family, intervals] : spec.family_intervals) {
    for (double interval : intervals) {
      for (double L : spec.window_sizes) {
        FeatureConfig cfg;
        cfg.window_L = L;
        cfg.ngram_n = spec.ngram_n;
        cfg.bin_m = spec.bin_m;
        cfg.label_min_events = spec.label_min_events;
        cfg.validate();
        for (int s = 0; s < spec.seeds; ++s) {
          const std::string tkey = std::string(family_name(family)) + "_i" + fmt_g(interval) +
                                   "_s" + std::to_string(s);
          const Trace& mal_trace = infected.at(tkey);
          const Trace& ben_trace = benign_traces[static_cast<std::size_t>(s)];
          const Trace* both[2] = {&ben_trace, &mal_trace};
          const Vocabulary vocab = build_vocabulary({both, 2}, cfg);
          SeedData sd;
          sd.benign_sys = featurize_syscalls(ben_trace, vocab, cfg);
          sd.benign_net = featurize_flows(ben_trace, cfg);
          sd.mal_sys = featurize_syscalls(mal_trace, vocab, cfg);
          sd.mal_net = featurize_flows(mal_trace, cfg);
          cache.emplace(tkey + "_L" + fmt_g(L), std::move(sd));
        }
      }
    }
  }

  // Enumerate cells in canonical key order.
  std::vector<CellKey> keys;
  for (const auto& [family, intervals] : spec.family_intervals)
    for (double interval : intervals)
      for (double L : spec.window_sizes)
        for (FeatureSet set : spec.feature_sets)
          keys.push_back({family, interval, L, set});
  std::sort(keys.begin(), keys.end());

  EvalReport report;
  report.spec = spec;
  report.cells.resize(keys.size());

  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= keys.size()) return;
      const CellKey& key = keys[idx];
      CellResult cell;
      cell.key = key;
      try {
        std::vector<double> pooled_scores;
        std::vector<Label> pooled_labels;
        std::string seed0_model;
        for (int s = 0; s < spec.seeds; ++s) {
          const std::string ckey = std::string(family_name(key.family)) + "_i" +
                                   fmt_g(key.exfil_interval) + "_s" + std::to_string(s) +
                                   "_L" + fmt_g(key.window_L);
          const SeedData& sd = cache.at(ckey);
          FeatureMatrix benign_fm, mal_fm;
          pick_feature_matrices(sd, key.feature_set, benign_fm, mal_fm);
          const std::uint64_t fold_seed =
              derive_seed(spec.master_seed, "fold:" + key.str() + ":s" + std::to_string(s));
          KfoldResult kr =
              kfold_eval(benign_fm, mal_fm, spec.folds, spec.pipeline, fold_seed);
          cell.fold_aucs.insert(cell.fold_aucs.end(), kr.fold_aucs.begin(),
                                kr.fold_aucs.end());
          cell.counts.tp += kr.pooled_f1.counts.tp;
          cell.counts.fp += kr.pooled_f1.counts.fp;
          cell.counts.tn += kr.pooled_f1.counts.tn;
          cell.counts.fn += kr.pooled_f1.counts.fn;
          pooled_scores.insert(pooled_scores.end(), kr.pooled_scores.begin(),
                               kr.pooled_scores.end());
          pooled_labels.insert(pooled_labels.end(), kr.pooled_labels.begin(),
                               kr.pooled_labels.end());
          if (s == 0) seed0_model = std::move(kr.fold0_model_bytes);
        }
        double mean = 0.0;
        for (double a : cell.fold_aucs) mean += a;
        mean /= static_cast<double>(cell.fold_aucs.size());
        double var = 0.0;
        for (double a : cell.fold_aucs) var += (a - mean) * (a - mean);
        cell.auc_mean = mean;
        cell.auc_std = std::sqrt(var / static_cast<double>(cell.fold_aucs.size()));
        const double denom =
            2.0 * cell.counts.tp + cell.counts.fp + cell.counts.fn;
        cell.f1 = denom == 0.0 ? 0.0 : 2.0 * cell.counts.tp / denom;
        cell.pooled_roc = roc_auc(pooled_scores, pooled_labels);

        std::lock_guard<std::mutex> lock(io_mutex);
        {
          std::ofstream os(out_dir + "/models/" + key.str() + ".model", std::ios::binary);
          os.write(seed0_model.data(), static_cast<std::streamsize>(seed0_model.size()));
        }
        {
          std::ofstream os(out_dir + "/roc/" + key.str() + ".csv", std::ios::binary);
          os << "threshold,fpr,tpr\n";
          char buf[128];
          for (const auto& p : cell.pooled_roc.points) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
            os << buf;
          }
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      report.cells[idx] = std::move(cell);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  {
    std::ofstream os(out_dir + "/report.csv", std::ios::binary);
    write_report_csv(report, os);
  }
  {
    std::ofstream os(out_dir + "/report.json", std::ios::binary);
    write_report_json(report, os);
  }
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& os) {
  os << "family,exfil_interval,window_L,feature_set,status,auc_mean,auc_std,f1,tp,fp,tn,fn,"
        "n_folds\n";
  char buf[256];
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%s,%s,%.17g,%.17g,%.17g,%zu,%zu,%zu,%zu,%zu\n",
                  family_name(c.key.family), c.key.exfil_interval, c.key.window_L,
                  feature_set_name(c.key.feature_set), c.failed ? "failed" : "ok",
                  c.auc_mean, c.auc_std, c.f1, c.counts.tp, c.counts.fp, c.counts.tn,
                  c.counts.fn, c.fold_aucs.size());
    os << buf;
  }
}

void write_report_json(const EvalReport& report, std::ostream& os) {
  ordered_json j;
  j["schema"] = 1;
  j["master_seed"] = report.spec.master_seed;
  j["seeds"] = report.spec.seeds;
  j["folds"] = report.spec.folds;
  j["cells"] = ordered_json::array();
  for (const auto& c : report.cells) {
    ordered_json cj;
    cj["key"] = c.key.str();
    cj["family"] = family_name(c.key.family);
    cj["exfil_interval"] = c.key.exfil_interval;
    cj["window_L"] = c.key.window_L;
    cj["feature_set"] = feature_set_name(c.key.feature_set);
    cj["status"] = c.failed ? "failed" : "ok";
    if (c.failed) {
      cj["error"] = c.error;
    } else {
      cj["auc_mean"] = c.auc_mean;
      cj["auc_std"] = c.auc_std;
      cj["f1"] = c.f1;
      cj["confusion"] = {{"tp", c.counts.tp}, {"fp", c.counts.fp},
                         {"tn", c.counts.tn}, {"fn", c.counts.fn}};
      cj["fold_aucs"] = c.fold_aucs;
    }
    j["cells"].push_back(std::move(cj));
  }
  os << j.dump(2) << "\n";
}

EvalReport read_report_csv(std::istream& is) {
  EvalReport report;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty report");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 13) throw DataError("bad report row: " + line);
    CellResult c;
    c.key.family = parse_family(fields[0]);
    c.key.exfil_interval = std::stod(fields[1]);
    c.key.window_L = std::stod(fields[2]);
    c.key.feature_set = parse_feature_set(fields[3]);
    c.failed = fields[4] != "ok";
    c.auc_mean = std::stod(fields[5]);
    c.auc_std = std::stod(fields[6]);
    c.f1 = std::stod(fields[7]);
    c.counts.tp = std::stoul(fields[8]);
    c.counts.fp = std::stoul(fields[9]);
    c.counts.tn = std::stoul(fields[10]);
    c.counts.fn = std::stoul(fields[11]);
    report.cells.push_back(std::move(c));
  }
  return report;
}

}  // namespace traceguard
