// Command-line front end for the traceguard shared library. Wires the
// pipeline end to end: simulate -> featurize -> train -> score -> eval ->
// experiment, plus a file validator. Talks to the library exclusively
// through the C API.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "traceguard/traceguard.h"

namespace {

int status_to_exit(tg_status s) {
  switch (s) {
    case TG_OK: return 0;
    case TG_ERR_USAGE: return 1;
    case TG_ERR_CONFIG: return 2;
    case TG_ERR_IO: return 2;
    case TG_ERR_CONVERGENCE: return 3;
  }
  return 2;
}

int report_error(tg_status s) {
  std::fprintf(stderr, "error: %s\n", tg_last_error());
  return status_to_exit(s);
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (is.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void print_stamp(const std::string& config_path, std::uint64_t seed) {
  std::fprintf(stderr, "%s | config %016" PRIx64 " | seed %" PRIu64 "\n", tg_version(),
               config_path.empty() ? 0 : fnv1a_file(config_path), seed);
}

int parse_set(const std::string& s) {
  if (s == "sys") return 0;
  if (s == "net") return 1;
  if (s == "both") return 2;
  throw CLI::ValidationError("--set", "expected sys|net|both");
}

struct TrainFlags {
  double nu = 0.05;
  double gamma = 0.0;
  std::string kernel = "rbf";
  double tol = 1e-6;
  long max_iter = 100000;
  double pca_variance = 0.95;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--nu", nu, "training outlier fraction bound, in (0,1]");
    cmd->add_option("--gamma", gamma, "RBF gamma; <=0 uses the scale rule");
    cmd->add_option("--kernel", kernel, "rbf|linear")
        ->check(CLI::IsMember({"rbf", "linear"}));
    cmd->add_option("--tol", tol, "solver KKT tolerance");
    cmd->add_option("--max-iter", max_iter, "solver iteration cap");
    cmd->add_option("--pca-variance", pca_variance, "explained-variance target");
  }

  tg_train_opts to_opts() const {
    tg_train_opts o;
    tg_train_opts_defaults(&o);
    o.nu = nu;
    o.gamma = gamma;
    o.kernel = kernel == "linear" ? 1 : 0;
    o.tol = tol;
    o.max_iter = max_iter;
    o.pca_variance = pca_variance;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traceguard: router-host trace synthesis and one-class anomaly detection"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a trace from a scenario file");
  std::string sim_scenario, sim_out;
  std::uint64_t sim_seed = 0;
  bool sim_has_seed = false;
  sim->add_option("--scenario", sim_scenario, "scenario file")->required();
  sim->add_option("--out", sim_out, "output trace path")->required();
  sim->add_option("--seed", sim_seed, "override the scenario seed")
      ->each([&](const std::string&) { sim_has_seed = true; });

  // featurize
  auto* feat = app.add_subcommand("featurize", "turn a trace into a feature matrix");
  std::string feat_trace, feat_out, feat_vocab, feat_set = "both";
  double feat_window = 5.0, feat_bin = 1.0;
  int feat_ngram = 2, feat_label_min = 1;
  bool feat_fit_vocab = false;
  feat->add_option("--trace", feat_trace, "input trace file")->required();
  feat->add_option("--out", feat_out, "output feature file")->required();
  feat->add_option("--window", feat_window, "window size L in seconds");
  feat->add_option("--ngram", feat_ngram, "n-gram length");
  feat->add_option("--bin", feat_bin, "network bin size m in seconds");
  feat->add_option("--set", feat_set, "feature set: sys|net|both")
      ->check(CLI::IsMember({"sys", "net", "both"}));
  feat->add_option("--vocab", feat_vocab, "vocabulary file (read, or written with --fit-vocab)");
  feat->add_flag("--fit-vocab", feat_fit_vocab, "build the vocabulary from this trace");
  feat->add_option("--label-min", feat_label_min, "malware events needed to mark a window");

  // train
  auto* train = app.add_subcommand("train", "fit scaler+PCA+one-class SVM on benign windows");
  std::string train_features, train_out;
  TrainFlags train_flags;
  train->add_option("--features", train_features, "benign feature file")->required();
  train->add_option("--out", train_out, "output model file")->required();
  train_flags.add_to(train);

  // score
  auto* score = app.add_subcommand("score", "score windows with a trained model");
  std::string score_model, score_features, score_out;
  score->add_option("--model", score_model, "model file")->required();
  score->add_option("--features", score_features, "feature file")->required();
  score->add_option("--out", score_out, "output scores file (one decision value per row)")
      ->required();

  // eval
  auto* eval = app.add_subcommand("eval", "k-fold one-class evaluation");
  std::string eval_benign, eval_malicious, eval_out;
  int eval_folds = 5;
  std::uint64_t eval_seed = 1;
  TrainFlags eval_flags;
  eval->add_option("--benign", eval_benign, "benign feature file")->required();
  eval->add_option("--malicious", eval_malicious, "malicious feature file")->required();
  eval->add_option("--folds", eval_folds, "fold count");
  eval->add_option("--seed", eval_seed, "fold-assignment seed");
  eval->add_option("--out", eval_out, "output JSON summary");
  eval_flags.add_to(eval);

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a full experiment grid");
  std::string exp_config, exp_out;
  int exp_jobs = 1;
  exp->add_option("--config", exp_config, "experiment spec file")->required();
  exp->add_option("--out", exp_out, "output directory")->required();
  exp->add_option("--jobs", exp_jobs, "parallel grid cells");

  // validate
  auto* val = app.add_subcommand("validate", "check trace/feature/model files");
  std::vector<std::string> val_files;
  val->add_option("files", val_files, "files to validate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Collapse CLI11's exit codes onto the documented 0 (help) / 1 (usage).
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (sim->parsed()) {
    print_stamp(sim_scenario, sim_seed);
    tg_trace* trace = nullptr;
    tg_status s = tg_simulate(sim_scenario.c_str(), sim_has_seed ? 1 : 0, sim_seed, &trace);
    if (s != TG_OK) return report_error(s);
    s = tg_trace_write(trace, sim_out.c_str());
    tg_trace_free(trace);
    if (s != TG_OK) return report_error(s);
    return 0;
  }

  if (feat->parsed()) {
    print_stamp(feat_trace, 0);
    tg_feature_opts opts;
    tg_feature_opts_defaults(&opts);
    opts.window_seconds = feat_window;
    opts.ngram_n = feat_ngram;
    opts.bin_seconds = feat_bin;
    opts.feature_set = parse_set(feat_set);
    opts.label_min_events = feat_label_min;
    tg_trace* trace = nullptr;
    tg_status s = tg_trace_read(feat_trace.c_str(), &trace);
    if (s != TG_OK) return report_error(s);
    tg_features* fm = nullptr;
    s = tg_featurize(trace, &opts, feat_vocab.empty() ? nullptr : feat_vocab.c_str(),
                     feat_fit_vocab ? 1 : 0, &fm);
    tg_trace_free(trace);
    if (s != TG_OK) return report_error(s);
    s = tg_features_write(fm, feat_out.c_str());
    tg_features_free(fm);
    if (s != TG_OK) return report_error(s);
    return 0;
  }

  if (train->parsed()) {
    print_stamp(train_features, 0);
    tg_features* fm = nullptr;
    tg_status s = tg_features_read(train_features.c_str(), &fm);
    if (s != TG_OK) return report_error(s);
    const tg_train_opts opts = train_flags.to_opts();
    tg_model* model = nullptr;
    s = tg_train(fm, &opts, &model);
    tg_features_free(fm);
    if (s != TG_OK) return report_error(s);
    s = tg_model_save(model, train_out.c_str());
    tg_model_free(model);
    if (s != TG_OK) return report_error(s);
    return 0;
  }

  if (score->parsed()) {
    print_stamp(score_model, 0);
    tg_model* model = nullptr;
    tg_status s = tg_model_load(score_model.c_str(), &model);
    if (s != TG_OK) return report_error(s);
    tg_features* fm = nullptr;
    s = tg_features_read(score_features.c_str(), &fm);
    if (s != TG_OK) {
      tg_model_free(model);
      return report_error(s);
    }
    std::vector<double> scores(tg_features_rows(fm));
    s = tg_score(model, fm, scores.data());
    tg_features_free(fm);
    tg_model_free(model);
    if (s != TG_OK) return report_error(s);
    std::ofstream os(score_out, std::ios::binary);
    if (!os) {
      std::fprintf(stderr, "error: cannot open for writing: %s\n", score_out.c_str());
      return 2;
    }
    char buf[64];
    for (double v : scores) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", v);
      os << buf;
    }
    return 0;
  }

  if (eval->parsed()) {
    print_stamp(eval_benign, eval_seed);
    tg_features* benign = nullptr;
    tg_features* malicious = nullptr;
    tg_status s = tg_features_read(eval_benign.c_str(), &benign);
    if (s != TG_OK) return report_error(s);
    s = tg_features_read(eval_malicious.c_str(), &malicious);
    if (s != TG_OK) {
      tg_features_free(benign);
      return report_error(s);
    }
    const tg_train_opts opts = eval_flags.to_opts();
    double auc_mean = 0, auc_std = 0, f1 = 0;
    s = tg_eval_kfold(benign, malicious, eval_folds, eval_seed, &opts,
                      eval_out.empty() ? nullptr : eval_out.c_str(), &auc_mean, &auc_std, &f1);
    tg_features_free(benign);
    tg_features_free(malicious);
    if (s != TG_OK) return report_error(s);
    std::printf("auc_mean %.6f auc_std %.6f f1 %.6f\n", auc_mean, auc_std, f1);
    return 0;
  }

  if (exp->parsed()) {
    std::ifstream cfg(exp_config);
    std::uint64_t master_seed = 0;
    std::string line;
    while (std::getline(cfg, line)) {
      std::istringstream ls(line);
      std::string k, eq;
      if (ls >> k >> eq && k == "master_seed" && eq == "=") ls >> master_seed;
    }
    print_stamp(exp_config, master_seed);
    const tg_status s = tg_experiment_run(exp_config.c_str(), exp_out.c_str(), exp_jobs);
    if (s != TG_OK) return report_error(s);
    return 0;
  }

  if (val->parsed()) {
    print_stamp("", 0);
    int rc = 0;
    for (const auto& f : val_files) {
      char msg[512] = {0};
      const tg_status s = tg_validate_file(f.c_str(), msg, sizeof(msg));
      if (s == TG_OK) {
        std::printf("%s: %s\n", f.c_str(), msg);
      } else {
        std::printf("%s: INVALID (%s)\n", f.c_str(), tg_last_error());
        rc = status_to_exit(s);
      }
    }
    return rc;
  }

  return 1;
}
