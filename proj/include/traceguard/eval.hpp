#ifndef TRACEGUARD_EVAL_HPP
#define TRACEGUARD_EVAL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "traceguard/features.hpp"
#include "traceguard/model.hpp"

namespace traceguard {

struct PipelineConfig {
  SvmConfig svm;
  double pca_variance = 0.95;
  double threshold = 0.0;  // decision threshold for F1 (f < threshold => Malicious)
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // decision-value threshold producing this point
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1), monotone
  double auc = 0.0;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct F1Result {
  double f1 = 0.0;
  bool degenerate = false;  // zero-denominator precision or recall
  ConfusionCounts counts;
};

// Threshold sweep over anomaly scores (-f); AUC equals the pairwise
// probability P(score_mal > score_ben) + ½ P(tie). Throws DataError when a
// class is missing.
RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels);

F1Result f1_at_threshold(std::span<const double> scores, std::span<const Label> labels,
                         double threshold = 0.0);

struct KfoldResult {
  std::vector<double> fold_aucs;
  double auc_mean = 0.0;
  double auc_std = 0.0;  // population std over folds
  F1Result pooled_f1;
  RocCurve pooled_roc;
  std::vector<double> pooled_scores;  // held-out decision values, fold order
  std::vector<Label> pooled_labels;
  std::vector<std::vector<std::size_t>> fold_test_rows;  // benign indices per fold
  std::vector<std::uint32_t> fold_model_crc;             // CRC32 of each fold's model
  std::string fold0_model_bytes;
  std::uint64_t fold_seed = 0;
};

// One-class protocol: per fold, fit vocabulary restriction + scaler + PCA +
// SVM on k-1 benign folds and score the held-out benign fold plus all
// malicious rows. Fold assignment is seeded and invariant under permutation
// of the benign rows (rows are canonicalized by content before shuffling).
// folds_override pins the benign test-row sets per fold (e.g. to rescore
// mutated data under the original assignment); it must partition the rows.
KfoldResult kfold_eval(const FeatureMatrix& benign_fm, const FeatureMatrix& malicious_fm,
                       int k, const PipelineConfig& config, std::uint64_t fold_seed,
                       const std::vector<std::vector<std::size_t>>* folds_override = nullptr);

// Row subset helper (schema and config preserved).
FeatureMatrix select_rows(const FeatureMatrix& fm, std::span<const std::size_t> rows);

std::uint32_t crc32_bytes(const std::string& bytes);

}  // namespace traceguard

#endif  // TRACEGUARD_EVAL_HPP
