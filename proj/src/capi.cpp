#include "traceguard/traceguard.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "traceguard/eval.hpp"
#include "traceguard/experiment.hpp"
#include "traceguard/features.hpp"
#include "traceguard/model.hpp"
#include "traceguard/scenario.hpp"
#include "traceguard/simulator.hpp"
#include "traceguard/trace_io.hpp"

using namespace traceguard;

struct tg_trace {
  Trace trace;
};
struct tg_features {
  FeatureMatrix fm;
};
struct tg_model {
  DetectorModel model;
};

namespace {

thread_local std::string g_last_error;

tg_status fail(tg_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Maps library exceptions onto stable status codes.
template <typename Fn>
tg_status guarded(Fn&& fn) {
  try {
    fn();
    return TG_OK;
  } catch (const ConvergenceError& e) {
    return fail(TG_ERR_CONVERGENCE, e.what());
  } catch (const ConfigError& e) {
    return fail(TG_ERR_CONFIG, e.what());
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.rfind("cannot open", 0) == 0) return fail(TG_ERR_IO, what);
    return fail(TG_ERR_CONFIG, what);
  } catch (const std::exception& e) {
    return fail(TG_ERR_CONFIG, e.what());
  }
}

FeatureConfig to_config(const tg_feature_opts& o) {
  FeatureConfig cfg;
  cfg.window_L = o.window_seconds;
  cfg.ngram_n = o.ngram_n;
  cfg.bin_m = o.bin_seconds;
  cfg.label_min_events = o.label_min_events;
  switch (o.feature_set) {
    case 0: cfg.feature_set = FeatureSet::SyscallsOnly; break;
    case 1: cfg.feature_set = FeatureSet::NetworkOnly; break;
    case 2: cfg.feature_set = FeatureSet::Combined; break;
    default: throw ConfigError("feature_set: must be 0, 1 or 2");
  }
  return cfg;
}

PipelineConfig to_pipeline(const tg_train_opts& o) {
  PipelineConfig p;
  p.svm.nu = o.nu;
  p.svm.gamma = o.gamma;
  p.svm.kernel = o.kernel == 1 ? KernelKind::Linear : KernelKind::Rbf;
  p.svm.tol = o.tol;
  p.svm.max_iter = o.max_iter;
  p.pca_variance = o.pca_variance;
  return p;
}

void copy_msg(char* buf, size_t buflen, const std::string& msg) {
  if (!buf || buflen == 0) return;
  const size_t n = std::min(buflen - 1, msg.size());
  std::memcpy(buf, msg.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* tg_version(void) { return "traceguard 1.0.0"; }

const char* tg_last_error(void) { return g_last_error.c_str(); }

tg_status tg_simulate(const char* scenario_path, int has_seed_override, uint64_t seed,
                      tg_trace** out) {
  if (!scenario_path || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    Scenario sc = parse_scenario_file(scenario_path);
    if (has_seed_override) sc.seed = seed;
    *out = new tg_trace{simulate(sc)};
  });
}

tg_status tg_trace_read(const char* path, tg_trace** out) {
  if (!path || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { *out = new tg_trace{read_trace_file(path)}; });
}

tg_status tg_trace_write(const tg_trace* trace, const char* path) {
  if (!trace || !path) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { write_trace_file(trace->trace, path); });
}

int tg_trace_validate(const tg_trace* trace, char* msgbuf, size_t buflen) {
  if (!trace) return -1;
  const auto violations = validate_trace(trace->trace);
  std::string msg;
  for (const auto& v : violations)
    msg += v.what + " (index " + std::to_string(v.index) + ")\n";
  copy_msg(msgbuf, buflen, msg);
  return static_cast<int>(violations.size());
}

void tg_trace_free(tg_trace* trace) { delete trace; }

void tg_feature_opts_defaults(tg_feature_opts* opts) {
  if (!opts) return;
  opts->window_seconds = 5.0;
  opts->ngram_n = 2;
  opts->bin_seconds = 1.0;
  opts->feature_set = 2;
  opts->label_min_events = 1;
}

tg_status tg_featurize(const tg_trace* trace, const tg_feature_opts* opts,
                       const char* vocab_path, int fit_vocab, tg_features** out) {
  if (!trace || !opts || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    const FeatureConfig cfg = to_config(*opts);
    Vocabulary vocab;
    const Vocabulary* vptr = nullptr;
    if (cfg.feature_set != FeatureSet::NetworkOnly) {
      if (!vocab_path) throw ConfigError("vocab path required for syscall features");
      if (fit_vocab) {
        vocab = build_vocabulary(std::span<const Trace>(&trace->trace, 1), cfg);
        vocab.write_file(vocab_path);
      } else {
        vocab = Vocabulary::read_file(vocab_path);
      }
      vptr = &vocab;
    }
    *out = new tg_features{featurize(trace->trace, vptr, cfg)};
  });
}

tg_status tg_features_read(const char* path, tg_features** out) {
  if (!path || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { *out = new tg_features{read_features_file(path)}; });
}

tg_status tg_features_write(const tg_features* fm, const char* path) {
  if (!fm || !path) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { write_features_file(fm->fm, path); });
}

size_t tg_features_rows(const tg_features* fm) { return fm ? fm->fm.rows : 0; }
size_t tg_features_cols(const tg_features* fm) { return fm ? fm->fm.cols : 0; }
void tg_features_free(tg_features* fm) { delete fm; }

void tg_train_opts_defaults(tg_train_opts* opts) {
  if (!opts) return;
  opts->nu = 0.05;
  opts->gamma = 0.0;
  opts->kernel = 0;
  opts->tol = 1e-6;
  opts->max_iter = 100000;
  opts->pca_variance = 0.95;
}

tg_status tg_train(const tg_features* benign_fm, const tg_train_opts* opts, tg_model** out) {
  if (!benign_fm || !opts || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    const PipelineConfig p = to_pipeline(*opts);
    *out = new tg_model{train_detector(benign_fm->fm, p.svm, p.pca_variance)};
  });
}

tg_status tg_model_save(const tg_model* model, const char* path) {
  if (!model || !path) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { save_model(model->model, path); });
}

tg_status tg_model_load(const char* path, tg_model** out) {
  if (!path || !out) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] { *out = new tg_model{load_model(path)}; });
}

tg_status tg_score(const tg_model* model, const tg_features* fm, double* scores) {
  if (!model || !fm || !scores) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    const Eigen::VectorXd v = score_detector(model->model, fm->fm);
    for (Eigen::Index i = 0; i < v.size(); ++i) scores[i] = v(i);
  });
}

void tg_model_free(tg_model* model) { delete model; }

tg_status tg_eval_kfold(const tg_features* benign_fm, const tg_features* malicious_fm,
                        int folds, uint64_t fold_seed, const tg_train_opts* opts,
                        const char* out_json_path, double* auc_mean, double* auc_std,
                        double* f1) {
  if (!benign_fm || !malicious_fm || !opts) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    const KfoldResult kr =
        kfold_eval(benign_fm->fm, malicious_fm->fm, folds, to_pipeline(*opts), fold_seed);
    if (auc_mean) *auc_mean = kr.auc_mean;
    if (auc_std) *auc_std = kr.auc_std;
    if (f1) *f1 = kr.pooled_f1.f1;
    if (out_json_path) {
      std::ofstream os(out_json_path, std::ios::binary);
      if (!os) throw DataError(std::string("cannot open for writing: ") + out_json_path);
      os << "{\n  \"auc_mean\": " << kr.auc_mean << ",\n  \"auc_std\": " << kr.auc_std
         << ",\n  \"f1\": " << kr.pooled_f1.f1 << ",\n  \"fold_aucs\": [";
      for (std::size_t i = 0; i < kr.fold_aucs.size(); ++i)
        os << (i ? ", " : "") << kr.fold_aucs[i];
      os << "]\n}\n";
    }
  });
}

tg_status tg_experiment_run(const char* spec_path, const char* out_dir, int jobs) {
  if (!spec_path || !out_dir) return fail(TG_ERR_USAGE, "null argument");
  return guarded([&] {
    const GridSpec spec = GridSpec::parse_file(spec_path);
    const EvalReport report = run_grid(spec, out_dir, jobs);
    std::size_t failures = 0;
    std::string first_error;
    for (const auto& c : report.cells)
      if (c.failed) {
        ++failures;
        if (first_error.empty()) first_error = c.key.str() + ": " + c.error;
      }
    if (failures > 0)
      throw DataError(std::to_string(failures) + " grid cell(s) failed; first: " + first_error);
  });
}

tg_status tg_validate_file(const char* path, char* msgbuf, size_t buflen) {
  if (!path) return fail(TG_ERR_USAGE, "null argument");
  std::ifstream probe(path, std::ios::binary);
  if (!probe) return fail(TG_ERR_IO, std::string("cannot open: ") + path);
  char head[16] = {0};
  probe.read(head, sizeof(head));
  probe.close();
  return guarded([&] {
    std::string msg;
    if (std::memcmp(head, "TGMD", 4) == 0) {
      load_model(path);  // load performs invariant validation
      msg = "model ok";
    } else if (std::strncmp(head, "#trace", 6) == 0) {
      const Trace t = read_trace_file(path);
      const auto violations = validate_trace(t);
      if (!violations.empty()) {
        std::string detail;
        for (const auto& v : violations)
          detail += v.what + " (index " + std::to_string(v.index) + "); ";
        throw DataError("trace invariant violations: " + detail);
      }
      msg = "trace ok";
    } else if (std::strncmp(head, "#features", 9) == 0) {
      read_features_file(path);
      msg = "features ok";
    } else if (std::strncmp(head, "#vocab", 6) == 0) {
      Vocabulary::read_file(path);
      msg = "vocabulary ok";
    } else {
      throw DataError(std::string("unrecognized file format: ") + path);
    }
    copy_msg(msgbuf, buflen, msg);
  });
}

}  // extern "C"
