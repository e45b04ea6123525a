/*
 * traceguard C API — stable shared-library surface over the detection
 * pipeline: trace synthesis, featurization, one-class SVM training, scoring,
 * k-fold evaluation, and experiment grids.
 *
 * All functions return tg_status; on error, tg_last_error() holds a
 * thread-local message. Handles are opaque and must be released with the
 * matching *_free function.
 */
#ifndef TRACEGUARD_C_API_H
#define TRACEGUARD_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tg_status {
  TG_OK = 0,
  TG_ERR_USAGE = 1,       /* bad arguments / null handles */
  TG_ERR_CONFIG = 2,      /* invalid configuration or data */
  TG_ERR_CONVERGENCE = 3, /* solver failed to converge */
  TG_ERR_IO = 4           /* file missing or unreadable/unwritable */
} tg_status;

typedef struct tg_trace tg_trace;
typedef struct tg_features tg_features;
typedef struct tg_model tg_model;

const char* tg_version(void);
const char* tg_last_error(void);

/* ---- traces ---- */

/* Simulates the scenario file; when has_seed_override is nonzero, `seed`
 * replaces the scenario's own seed. */
tg_status tg_simulate(const char* scenario_path, int has_seed_override, uint64_t seed,
                      tg_trace** out);
tg_status tg_trace_read(const char* path, tg_trace** out);
tg_status tg_trace_write(const tg_trace* trace, const char* path);
/* Returns the invariant-violation count; writes a newline-separated summary
 * into msgbuf when provided. */
int tg_trace_validate(const tg_trace* trace, char* msgbuf, size_t buflen);
void tg_trace_free(tg_trace* trace);

/* ---- features ---- */

typedef struct tg_feature_opts {
  double window_seconds;   /* L  */
  int ngram_n;             /* n  */
  double bin_seconds;      /* m  */
  int feature_set;         /* 0 = syscalls, 1 = network, 2 = combined */
  int label_min_events;
} tg_feature_opts;

void tg_feature_opts_defaults(tg_feature_opts* opts);

/* vocab_path: required for feature sets 0 and 2. When fit_vocab is nonzero
 * the vocabulary is built from this trace and written to vocab_path;
 * otherwise it is loaded from vocab_path. */
tg_status tg_featurize(const tg_trace* trace, const tg_feature_opts* opts,
                       const char* vocab_path, int fit_vocab, tg_features** out);
tg_status tg_features_read(const char* path, tg_features** out);
tg_status tg_features_write(const tg_features* fm, const char* path);
size_t tg_features_rows(const tg_features* fm);
size_t tg_features_cols(const tg_features* fm);
void tg_features_free(tg_features* fm);

/* ---- detector ---- */

typedef struct tg_train_opts {
  double nu;           /* (0, 1] */
  double gamma;        /* <= 0 selects the scale rule */
  int kernel;          /* 0 = RBF, 1 = linear */
  double tol;
  long max_iter;
  double pca_variance; /* cumulative explained-variance target */
} tg_train_opts;

void tg_train_opts_defaults(tg_train_opts* opts);

tg_status tg_train(const tg_features* benign_fm, const tg_train_opts* opts, tg_model** out);
tg_status tg_model_save(const tg_model* model, const char* path);
tg_status tg_model_load(const char* path, tg_model** out);
/* scores must hold tg_features_rows(fm) doubles; f < 0 marks anomalies. */
tg_status tg_score(const tg_model* model, const tg_features* fm, double* scores);
void tg_model_free(tg_model* model);

/* ---- evaluation ---- */

/* k-fold one-class evaluation; writes a JSON summary to out_json_path when
 * non-null. Outputs (may be null): mean/std of fold AUCs and pooled F1. */
tg_status tg_eval_kfold(const tg_features* benign_fm, const tg_features* malicious_fm,
                        int folds, uint64_t fold_seed, const tg_train_opts* opts,
                        const char* out_json_path, double* auc_mean, double* auc_std,
                        double* f1);

/* Full experiment grid from a spec file into out_dir (traces/, models/,
 * roc/, report.csv, report.json). jobs bounds cell parallelism. */
tg_status tg_experiment_run(const char* spec_path, const char* out_dir, int jobs);

/* Auto-detecting validator for trace/feature/model files. Returns TG_OK when
 * the file parses and satisfies its invariants. */
tg_status tg_validate_file(const char* path, char* msgbuf, size_t buflen);

#ifdef __cplusplus
}
#endif

#endif /* TRACEGUARD_C_API_H */
