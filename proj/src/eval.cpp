#include "traceguard/eval.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "traceguard/rng.hpp"

namespace traceguard {

std::uint32_t crc32_bytes(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw DataError("roc_auc: size mismatch");
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) (l == Label::Malicious ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw DataError("roc_auc: undefined metric, both classes required");

  // Anomaly ordering: lower decision value = more anomalous.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  RocCurve out;
  out.points.push_back({0.0, 0.0, -std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::size_t g_tp = 0, g_fp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == Label::Malicious ? g_tp : g_fp)++;
      ++i;
    }
    const double prev_tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double prev_fpr = static_cast<double>(fp) / static_cast<double>(neg);
    tp += g_tp;
    fp += g_fp;
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    out.points.push_back({fpr, tpr, s});
  }
  out.auc = auc;
  return out;
}

F1Result f1_at_threshold(std::span<const double> scores, std::span<const Label> labels,
                         double threshold) {
  if (scores.size() != labels.size()) throw DataError("f1: size mismatch");
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) (l == Label::Malicious ? pos : neg)++;
  if (pos == 0 || neg == 0) throw DataError("f1: undefined metric, both classes required");
  F1Result r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred_mal = scores[i] < threshold;
    const bool is_mal = labels[i] == Label::Malicious;
    if (pred_mal && is_mal) ++r.counts.tp;
    else if (pred_mal && !is_mal) ++r.counts.fp;
    else if (!pred_mal && is_mal) ++r.counts.fn;
    else ++r.counts.tn;
  }
  if (r.counts.tp + r.counts.fp == 0 || r.counts.tp + r.counts.fn == 0) {
    r.degenerate = true;
    r.f1 = 0.0;
    return r;
  }
  const double p = static_cast<double>(r.counts.tp) / (r.counts.tp + r.counts.fp);
  const double rec = static_cast<double>(r.counts.tp) / (r.counts.tp + r.counts.fn);
  r.f1 = (p + rec) == 0.0 ? 0.0 : 2.0 * p * rec / (p + rec);
  return r;
}

FeatureMatrix select_rows(const FeatureMatrix& fm, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.config = fm.config;
  out.schema = fm.schema;
  out.cols = fm.cols;
  out.rows = rows.size();
  out.data.resize(out.rows * out.cols);
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(fm.data.data() + rows[i] * fm.cols, fm.cols, out.data.data() + i * out.cols);
    out.labels.push_back(fm.labels[rows[i]]);
  }
  return out;
}

namespace {

// Canonical benign-row order: content-lexicographic, so fold assignment does
// not depend on the incoming row permutation.
std::vector<std::size_t> canonical_order(const FeatureMatrix& fm) {
  std::vector<std::size_t> order(fm.rows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = fm.row(a);
    const auto rb = fm.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

}  // namespace

KfoldResult kfold_eval(const FeatureMatrix& benign_fm, const FeatureMatrix& malicious_fm,
                       int k, const PipelineConfig& config, std::uint64_t fold_seed,
                       const std::vector<std::vector<std::size_t>>* folds_override) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  if (benign_fm.cols != malicious_fm.cols ||
      benign_fm.schema_fingerprint() != malicious_fm.schema_fingerprint())
    throw DataError("kfold: benign/malicious schema mismatch");
  for (Label l : benign_fm.labels)
    if (l != Label::Benign) throw DataError("kfold: benign matrix contains malicious rows");
  if (malicious_fm.rows == 0)
    throw DataError("kfold: undefined metric, no malicious rows");
  const std::size_t n = benign_fm.rows;
  const std::size_t max_fold = (n + static_cast<std::size_t>(k) - 1) / k;
  if (n < static_cast<std::size_t>(k) || n - max_fold < 10)
    throw DataError("kfold: insufficient benign rows (" + std::to_string(n) +
                    "); need at least " + std::to_string(10 * k / (k - 1) + 1) +
                    " for k=" + std::to_string(k));

  // Seeded shuffle of the canonical order, then round-robin folds.
  std::vector<std::vector<std::size_t>> folds(k);
  if (folds_override) {
    if (folds_override->size() != static_cast<std::size_t>(k))
      throw ConfigError("kfold: folds_override must have k entries");
    std::size_t covered = 0;
    for (const auto& f : *folds_override) covered += f.size();
    if (covered != n) throw ConfigError("kfold: folds_override must partition the rows");
    folds = *folds_override;
  } else {
    std::vector<std::size_t> order = canonical_order(benign_fm);
    Rng rng(fold_seed);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  }

  // Stack benign + malicious so per-fold vocabulary restriction sees both.
  std::vector<std::size_t> all_benign(n);
  std::iota(all_benign.begin(), all_benign.end(), 0);
  FeatureMatrix stacked = select_rows(benign_fm, all_benign);
  {
    stacked.data.insert(stacked.data.end(), malicious_fm.data.begin(), malicious_fm.data.end());
    stacked.labels.insert(stacked.labels.end(), malicious_fm.labels.begin(),
                          malicious_fm.labels.end());
    stacked.rows += malicious_fm.rows;
  }

  KfoldResult res;
  res.fold_seed = fold_seed;
  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    for (int g = 0; g < k; ++g)
      if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    std::sort(train_rows.begin(), train_rows.end());

    const FeatureMatrix restricted = restrict_to_vocab_support(stacked, train_rows);
    const FeatureMatrix train = select_rows(restricted, train_rows);
    DetectorModel model = train_detector(train, config.svm, config.pca_variance,
                                         nullptr, fold_seed);
    const std::string bytes = serialize_model(model);
    res.fold_model_crc.push_back(crc32_bytes(bytes));
    if (f == 0) res.fold0_model_bytes = bytes;

    std::vector<std::size_t> test_rows = folds[f];
    std::sort(test_rows.begin(), test_rows.end());
    std::vector<std::size_t> eval_rows = test_rows;
    for (std::size_t m = 0; m < malicious_fm.rows; ++m) eval_rows.push_back(n + m);
    const FeatureMatrix test = select_rows(restricted, eval_rows);
    const Eigen::VectorXd scores = score_detector(model, test);

    std::vector<double> svec(scores.data(), scores.data() + scores.size());
    const RocCurve roc = roc_auc(svec, test.labels);
    res.fold_aucs.push_back(roc.auc);
    res.fold_test_rows.push_back(test_rows);
    pooled_scores.insert(pooled_scores.end(), svec.begin(), svec.end());
    pooled_labels.insert(pooled_labels.end(), test.labels.begin(), test.labels.end());
  }
  double mean = 0.0;
  for (double a : res.fold_aucs) mean += a;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double a : res.fold_aucs) var += (a - mean) * (a - mean);
  res.auc_mean = mean;
  res.auc_std = std::sqrt(var / static_cast<double>(k));
  res.pooled_roc = roc_auc(pooled_scores, pooled_labels);
  res.pooled_f1 = f1_at_threshold(pooled_scores, pooled_labels, config.threshold);
  res.pooled_scores = std::move(pooled_scores);
  res.pooled_labels = std::move(pooled_labels);
  return res;
}

}  // namespace traceguard
