#ifndef TRACEGUARD_FEATURES_HPP
#define TRACEGUARD_FEATURES_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "traceguard/types.hpp"

namespace traceguard {

enum class FeatureSet : std::uint8_t { SyscallsOnly = 0, NetworkOnly = 1, Combined = 2 };

const char* feature_set_name(FeatureSet s);
FeatureSet parse_feature_set(const std::string& s);

struct FeatureConfig {
  double window_L = 5.0;
  int ngram_n = 2;
  double bin_m = 1.0;
  FeatureSet feature_set = FeatureSet::Combined;
  int label_min_events = 1;

  void validate() const;  // throws ConfigError naming the field
};

enum class ColumnKind : std::uint8_t { Unk = 0, Ngram = 1, Flow = 2 };
enum class AggKind : std::uint8_t { Sum = 0, Mean = 1 };

struct Column {
  ColumnKind kind = ColumnKind::Flow;
  AggKind agg = AggKind::Sum;
  std::string name;

  bool operator==(const Column&) const = default;
};

// Bag-of-n-grams vocabulary over per-pid consecutive syscall sequences.
// Column 0 is the reserved UNK bucket for n-grams unseen in training.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(int n);

  int n() const { return n_; }
  std::size_t size() const { return grams_.size(); }  // includes UNK at index 0
  // Returns column index, 0 (UNK) when absent.
  std::size_t lookup(std::span<const std::uint16_t> gram) const;
  // Inserts if absent; returns column index.
  std::size_t insert(std::span<const std::uint16_t> gram);
  const std::vector<std::uint16_t>& gram(std::size_t idx) const { return grams_[idx]; }
  std::string gram_name(std::size_t idx) const;

  void write(std::ostream& os) const;
  static Vocabulary read(std::istream& is);
  void write_file(const std::string& path) const;
  static Vocabulary read_file(const std::string& path);

  bool operator==(const Vocabulary& o) const { return n_ == o.n_ && grams_ == o.grams_; }

 private:
  static std::uint64_t encode(std::span<const std::uint16_t> gram);
  int n_ = 2;
  std::vector<std::vector<std::uint16_t>> grams_{{}};  // index 0 = UNK
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::vector<Column> schema;
  std::vector<Label> labels;
  FeatureConfig config;

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::uint64_t schema_fingerprint() const;
};

// Per-window ground truth: Malicious iff the window span contains at least
// label_min_events malware-origin records (syscalls or flows).
std::vector<Label> compute_labels(const Trace& trace, const FeatureConfig& config);

Vocabulary build_vocabulary(std::span<const Trace> training, const FeatureConfig& config);
Vocabulary build_vocabulary(std::span<const Trace* const> training, const FeatureConfig& config);

FeatureMatrix featurize_syscalls(const Trace& trace, const Vocabulary& vocab,
                                 const FeatureConfig& config);
FeatureMatrix featurize_flows(const Trace& trace, const FeatureConfig& config);
FeatureMatrix combine(const FeatureMatrix& syscall_fm, const FeatureMatrix& flow_fm);

// Dispatch on config.feature_set; vocab may be null for NetworkOnly.
FeatureMatrix featurize(const Trace& trace, const Vocabulary* vocab,
                        const FeatureConfig& config);

struct ScalerStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std

  bool operator==(const ScalerStats&) const = default;
};

ScalerStats fit_scaler(const FeatureMatrix& train_fm);
FeatureMatrix apply_scaler(const FeatureMatrix& fm, const ScalerStats& stats);

// Drops n-gram columns with zero support on the given training rows, folding
// their counts into UNK. Flow columns are kept unconditionally. Used by the
// fold protocol so the vocabulary is effectively fit on training rows only.
FeatureMatrix restrict_to_vocab_support(const FeatureMatrix& fm,
                                        std::span<const std::size_t> train_rows);

// Columnar text persistence with schema header and label column.
void write_features(const FeatureMatrix& fm, std::ostream& os);
FeatureMatrix read_features(std::istream& is);
void write_features_file(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix read_features_file(const std::string& path);

}  // namespace traceguard

#endif  // TRACEGUARD_FEATURES_HPP
