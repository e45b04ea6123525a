#include "traceguard/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "traceguard/rng.hpp"

namespace traceguard {

const char* feature_set_name(FeatureSet s) {
  switch (s) {
    case FeatureSet::SyscallsOnly: return "sys";
    case FeatureSet::NetworkOnly: return "net";
    case FeatureSet::Combined: return "both";
  }
  return "?";
}

FeatureSet parse_feature_set(const std::string& s) {
  if (s == "sys" || s == "syscalls") return FeatureSet::SyscallsOnly;
  if (s == "net" || s == "network") return FeatureSet::NetworkOnly;
  if (s == "both" || s == "combined") return FeatureSet::Combined;
  throw ConfigError("unknown feature set '" + s + "' (expected sys|net|both)");
}

void FeatureConfig::validate() const {
  if (window_L <= 0.0) throw ConfigError("window_L: must be > 0");
  if (bin_m <= 0.0) throw ConfigError("bin_m: must be > 0");
  if (bin_m > window_L) throw ConfigError("bin_m: must be <= window_L");
  const double ratio = window_L / bin_m;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("window_L: must be an integer multiple of bin_m");
  if (ngram_n < 1) throw ConfigError("ngram_n: must be >= 1");
  if (ngram_n > 10) throw ConfigError("ngram_n: at most 10 supported");
  if (label_min_events < 1) throw ConfigError("label_min_events: must be >= 1");
}

Vocabulary::Vocabulary(int n) : n_(n) {
  if (n < 1 || n > 10) throw ConfigError("ngram_n: must be in [1, 10]");
}

std::uint64_t Vocabulary::encode(std::span<const std::uint16_t> gram) {
  std::uint64_t key = 1;  // sentinel bit keeps different lengths distinct
  for (auto id : gram) key = (key << 6) | id;
  return key;
}

std::size_t Vocabulary::lookup(std::span<const std::uint16_t> gram) const {
  auto it = index_.find(encode(gram));
  return it == index_.end() ? 0 : it->second;
}

std::size_t Vocabulary::insert(std::span<const std::uint16_t> gram) {
  auto [it, added] = index_.try_emplace(encode(gram), grams_.size());
  if (added) grams_.emplace_back(gram.begin(), gram.end());
  return it->second;
}

std::string Vocabulary::gram_name(std::size_t idx) const {
  if (idx == 0) return "UNK";
  std::string out;
  for (std::size_t i = 0; i < grams_[idx].size(); ++i) {
    if (i) out.push_back('|');
    out += syscall_name(grams_[idx][i]);
  }
  return out;
}

void Vocabulary::write(std::ostream& os) const {
  os << "#vocab v1 n=" << n_ << "\n";
  for (std::size_t i = 1; i < grams_.size(); ++i) {
    for (std::size_t j = 0; j < grams_[i].size(); ++j) {
      if (j) os << ' ';
      os << syscall_name(grams_[i][j]);
    }
    os << '\n';
  }
}

Vocabulary Vocabulary::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty vocabulary file");
  int n = 0;
  if (std::sscanf(line.c_str(), "#vocab v1 n=%d", &n) != 1)
    throw DataError("bad vocabulary header");
  Vocabulary v(n);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    std::vector<std::uint16_t> gram;
    while (ls >> name) gram.push_back(syscall_id(name));
    if (static_cast<int>(gram.size()) != n)
      throw DataError("vocabulary line " + std::to_string(line_no) + ": wrong n-gram length");
    if (v.lookup(gram) != 0)
      throw DataError("vocabulary line " + std::to_string(line_no) + ": duplicate n-gram");
    v.insert(gram);
  }
  return v;
}

void Vocabulary::write_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write(os);
}

Vocabulary Vocabulary::read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read(is);
}

std::uint64_t FeatureMatrix::schema_fingerprint() const {
  std::string blob;
  for (const auto& c : schema) {
    blob += std::to_string(static_cast<int>(c.kind));
    blob += std::to_string(static_cast<int>(c.agg));
    blob += c.name;
    blob += ';';
  }
  return fnv1a64(blob);
}

namespace {

std::size_t window_count(const Trace& trace, const FeatureConfig& cfg) {
  return static_cast<std::size_t>(std::floor(trace.duration / cfg.window_L + 1e-9));
}

std::size_t window_of(double ts, double L, std::size_t n_windows) {
  const auto w = static_cast<std::size_t>(std::floor(ts / L));
  return std::min(w, n_windows);  // == n_windows means "past last full window"
}

// Visit per-pid consecutive n-grams of one tumbling window.
template <typename Fn>
void for_each_window_gram(std::span<const SyscallEvent> events, int n, Fn&& fn) {
  std::map<std::int32_t, std::vector<std::uint16_t>> tails;
  for (const auto& e : events) {
    auto& tail = tails[e.pid];
    tail.push_back(e.name_id);
    if (static_cast<int>(tail.size()) == n) {
      fn(std::span<const std::uint16_t>(tail));
      tail.erase(tail.begin());
    }
  }
}

// Bounds [first, last) of events whose window index == w, given sorted events.
template <typename Rec>
std::vector<std::pair<std::size_t, std::size_t>> window_spans(
    const std::vector<Rec>& recs, double L, std::size_t n_windows) {
  std::vector<std::pair<std::size_t, std::size_t>> spans(n_windows, {0, 0});
  std::size_t i = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    while (i < recs.size() && recs[i].timestamp < static_cast<double>(w) * L) ++i;
    const std::size_t first = i;
    while (i < recs.size() && recs[i].timestamp < static_cast<double>(w + 1) * L) ++i;
    spans[w] = {first, i};
  }
  return spans;
}

}  // namespace

std::vector<Label> compute_labels(const Trace& trace, const FeatureConfig& cfg) {
  const std::size_t n = window_count(trace, cfg);
  std::vector<int> malware_events(n, 0);
  for (const auto& e : trace.syscalls) {
    const std::size_t w = window_of(e.timestamp, cfg.window_L, n);
    if (w < n && e.origin == Origin::Malware) ++malware_events[w];
  }
  for (const auto& f : trace.flows) {
    const std::size_t w = window_of(f.timestamp, cfg.window_L, n);
    if (w < n && f.origin == Origin::Malware) ++malware_events[w];
  }
  std::vector<Label> labels(n, Label::Benign);
  for (std::size_t w = 0; w < n; ++w)
    if (malware_events[w] >= cfg.label_min_events) labels[w] = Label::Malicious;
  return labels;
}

Vocabulary build_vocabulary(std::span<const Trace* const> training, const FeatureConfig& cfg) {
  cfg.validate();
  std::size_t total_events = 0;
  for (const auto* t : training) total_events += t->syscalls.size();
  if (total_events == 0) throw DataError("no training events");
  Vocabulary vocab(cfg.ngram_n);
  for (const auto* trace : training) {
    const std::size_t n = window_count(*trace, cfg);
    const auto spans = window_spans(trace->syscalls, cfg.window_L, n);
    for (const auto& [first, last] : spans) {
      for_each_window_gram(
          std::span<const SyscallEvent>(trace->syscalls.data() + first, last - first),
          cfg.ngram_n, [&](std::span<const std::uint16_t> g) { vocab.insert(g); });
    }
  }
  return vocab;
}

Vocabulary build_vocabulary(std::span<const Trace> training, const FeatureConfig& cfg) {
  std::vector<const Trace*> ptrs;
  for (const auto& t : training) ptrs.push_back(&t);
  return build_vocabulary(std::span<const Trace* const>(ptrs), cfg);
}

FeatureMatrix featurize_syscalls(const Trace& trace, const Vocabulary& vocab,
                                 const FeatureConfig& cfg) {
  cfg.validate();
  FeatureMatrix fm;
  fm.config = cfg;
  fm.rows = window_count(trace, cfg);
  fm.cols = vocab.size();
  fm.data.assign(fm.rows * fm.cols, 0.0);
  fm.labels = compute_labels(trace, cfg);
  fm.schema.reserve(fm.cols);
  fm.schema.push_back({ColumnKind::Unk, AggKind::Sum, "sys:UNK"});
  for (std::size_t i = 1; i < vocab.size(); ++i)
    fm.schema.push_back({ColumnKind::Ngram, AggKind::Sum, "sys:" + vocab.gram_name(i)});
  const auto spans = window_spans(trace.syscalls, cfg.window_L, fm.rows);
  for (std::size_t w = 0; w < fm.rows; ++w) {
    const auto [first, last] = spans[w];
    for_each_window_gram(
        std::span<const SyscallEvent>(trace.syscalls.data() + first, last - first),
        cfg.ngram_n,
        [&](std::span<const std::uint16_t> g) { fm.at(w, vocab.lookup(g)) += 1.0; });
  }
  return fm;
}

namespace {

struct BinAccum {
  std::vector<double> bytes;
  std::vector<double> times;
  int flag_counts[5] = {0, 0, 0, 0, 0};
  std::set<std::string> peers;
  std::set<std::uint16_t> ports;
};

constexpr int kPerDirFeatures = 15;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

void bin_vector(const BinAccum& b, double* out) {
  const auto n = static_cast<double>(b.bytes.size());
  std::vector<double> iats;
  for (std::size_t i = 1; i < b.times.size(); ++i)
    iats.push_back(b.times[i] - b.times[i - 1]);
  out[0] = n;  // pkt_count
  double total = 0.0;
  for (double x : b.bytes) total += x;
  out[1] = total;                                       // byte_sum
  out[2] = mean_of(b.bytes);                            // mean_bytes
  out[3] = pop_std(b.bytes);                            // std_bytes
  out[4] = b.bytes.empty() ? 0.0 : *std::min_element(b.bytes.begin(), b.bytes.end());
  out[5] = b.bytes.empty() ? 0.0 : *std::max_element(b.bytes.begin(), b.bytes.end());
  out[6] = mean_of(iats);                               // iat_mean
  out[7] = pop_std(iats);                               // iat_std
  for (int i = 0; i < 5; ++i) out[8 + i] = b.flag_counts[i];
  out[13] = static_cast<double>(b.peers.size());
  out[14] = static_cast<double>(b.ports.size());
}

}  // namespace

FeatureMatrix featurize_flows(const Trace& trace, const FeatureConfig& cfg) {
  cfg.validate();
  static const char* kNames[kPerDirFeatures] = {
      "pkt_count", "byte_sum", "mean_bytes", "std_bytes", "min_bytes", "max_bytes",
      "iat_mean", "iat_std", "syn", "ack", "fin", "rst", "psh",
      "distinct_peers", "distinct_ports"};
  static const AggKind kAggs[kPerDirFeatures] = {
      AggKind::Sum, AggKind::Sum, AggKind::Mean, AggKind::Mean, AggKind::Mean,
      AggKind::Mean, AggKind::Mean, AggKind::Mean, AggKind::Sum, AggKind::Sum,
      AggKind::Sum, AggKind::Sum, AggKind::Sum, AggKind::Sum, AggKind::Sum};

  FeatureMatrix fm;
  fm.config = cfg;
  fm.rows = window_count(trace, cfg);
  fm.cols = 2 * kPerDirFeatures;
  fm.data.assign(fm.rows * fm.cols, 0.0);
  fm.labels = compute_labels(trace, cfg);
  for (const char* dir : {"out", "in"})
    for (int i = 0; i < kPerDirFeatures; ++i)
      fm.schema.push_back({ColumnKind::Flow, kAggs[i],
                           std::string("net:") + dir + ":" + kNames[i] +
                               (kAggs[i] == AggKind::Sum ? ":sum" : ":mean")});

  const auto bins_per_window =
      static_cast<std::size_t>(std::round(cfg.window_L / cfg.bin_m));
  const auto spans = window_spans(trace.flows, cfg.window_L, fm.rows);
  std::vector<double> binvec(kPerDirFeatures);
  for (std::size_t w = 0; w < fm.rows; ++w) {
    std::vector<BinAccum> out_bins(bins_per_window), in_bins(bins_per_window);
    const auto [first, last] = spans[w];
    for (std::size_t i = first; i < last; ++i) {
      const auto& f = trace.flows[i];
      const double rel = f.timestamp - static_cast<double>(w) * cfg.window_L;
      auto b = static_cast<std::size_t>(std::floor(rel / cfg.bin_m));
      if (b >= bins_per_window) b = bins_per_window - 1;
      BinAccum& acc = (f.direction == Direction::Outbound) ? out_bins[b] : in_bins[b];
      acc.bytes.push_back(static_cast<double>(f.bytes));
      acc.times.push_back(f.timestamp);
      if (f.flags & flag::SYN) ++acc.flag_counts[0];
      if (f.flags & flag::ACK) ++acc.flag_counts[1];
      if (f.flags & flag::FIN) ++acc.flag_counts[2];
      if (f.flags & flag::RST) ++acc.flag_counts[3];
      if (f.flags & flag::PSH) ++acc.flag_counts[4];
      acc.peers.insert(f.peer);
      acc.ports.insert(f.port);
    }
    for (int d = 0; d < 2; ++d) {
      const auto& bins = d == 0 ? out_bins : in_bins;
      const std::size_t base = static_cast<std::size_t>(d) * kPerDirFeatures;
      for (const auto& bin : bins) {
        bin_vector(bin, binvec.data());
        for (int i = 0; i < kPerDirFeatures; ++i) {
          if (kAggs[i] == AggKind::Sum)
            fm.at(w, base + i) += binvec[static_cast<std::size_t>(i)];
          else
            fm.at(w, base + i) +=
                binvec[static_cast<std::size_t>(i)] / static_cast<double>(bins_per_window);
        }
      }
    }
  }
  return fm;
}

FeatureMatrix combine(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.config.window_L != b.config.window_L)
    throw DataError("combine: window_L mismatch");
  if (a.rows != b.rows)
    throw DataError("combine: row count mismatch (" + std::to_string(a.rows) + " vs " +
                    std::to_string(b.rows) + ")");
  for (std::size_t r = 0; r < a.rows; ++r)
    if (a.labels[r] != b.labels[r])
      throw DataError("combine: label mismatch at row " + std::to_string(r));
  FeatureMatrix fm;
  fm.config = a.config;
  fm.config.feature_set = FeatureSet::Combined;
  fm.rows = a.rows;
  fm.cols = a.cols + b.cols;
  fm.labels = a.labels;
  fm.schema = a.schema;
  fm.schema.insert(fm.schema.end(), b.schema.begin(), b.schema.end());
  fm.data.resize(fm.rows * fm.cols);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    std::copy_n(a.data.data() + r * a.cols, a.cols, fm.data.data() + r * fm.cols);
    std::copy_n(b.data.data() + r * b.cols, b.cols, fm.data.data() + r * fm.cols + a.cols);
  }
  return fm;
}

FeatureMatrix featurize(const Trace& trace, const Vocabulary* vocab,
                        const FeatureConfig& cfg) {
  switch (cfg.feature_set) {
    case FeatureSet::SyscallsOnly: {
      if (!vocab) throw ConfigError("feature_set sys requires a vocabulary");
      auto fm = featurize_syscalls(trace, *vocab, cfg);
      fm.config.feature_set = FeatureSet::SyscallsOnly;
      return fm;
    }
    case FeatureSet::NetworkOnly: {
      auto fm = featurize_flows(trace, cfg);
      fm.config.feature_set = FeatureSet::NetworkOnly;
      return fm;
    }
    case FeatureSet::Combined: {
      if (!vocab) throw ConfigError("feature_set both requires a vocabulary");
      return combine(featurize_syscalls(trace, *vocab, cfg), featurize_flows(trace, cfg));
    }
  }
  throw ConfigError("bad feature set");
}

ScalerStats fit_scaler(const FeatureMatrix& fm) {
  if (fm.rows == 0) throw DataError("fit_scaler: empty matrix");
  ScalerStats st;
  st.mean.assign(fm.cols, 0.0);
  st.stddev.assign(fm.cols, 0.0);
  for (std::size_t r = 0; r < fm.rows; ++r)
    for (std::size_t c = 0; c < fm.cols; ++c) st.mean[c] += fm.at(r, c);
  for (auto& m : st.mean) m /= static_cast<double>(fm.rows);
  for (std::size_t r = 0; r < fm.rows; ++r)
    for (std::size_t c = 0; c < fm.cols; ++c) {
      const double d = fm.at(r, c) - st.mean[c];
      st.stddev[c] += d * d;
    }
  for (auto& s : st.stddev) s = std::sqrt(s / static_cast<double>(fm.rows));
  return st;
}

FeatureMatrix apply_scaler(const FeatureMatrix& fm, const ScalerStats& st) {
  if (st.mean.size() != fm.cols) throw DataError("apply_scaler: width mismatch");
  FeatureMatrix out = fm;
  for (std::size_t r = 0; r < fm.rows; ++r)
    for (std::size_t c = 0; c < fm.cols; ++c)
      out.at(r, c) = (fm.at(r, c) - st.mean[c]) / std::max(st.stddev[c], 1e-12);
  return out;
}

FeatureMatrix restrict_to_vocab_support(const FeatureMatrix& fm,
                                        std::span<const std::size_t> train_rows) {
  std::vector<std::size_t> keep;
  keep.reserve(fm.cols);
  std::vector<bool> drop(fm.cols, false);
  for (std::size_t c = 0; c < fm.cols; ++c) {
    if (fm.schema[c].kind != ColumnKind::Ngram) {
      keep.push_back(c);
      continue;
    }
    double support = 0.0;
    for (std::size_t r : train_rows) support += fm.at(r, c);
    if (support > 0.0) keep.push_back(c);
    else drop[c] = true;
  }
  if (keep.size() == fm.cols) return fm;
  std::size_t unk_idx = fm.cols;  // position of UNK in kept columns
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (fm.schema[keep[i]].kind == ColumnKind::Unk) unk_idx = i;
  FeatureMatrix out;
  out.config = fm.config;
  out.rows = fm.rows;
  out.cols = keep.size();
  out.labels = fm.labels;
  for (std::size_t c : keep) out.schema.push_back(fm.schema[c]);
  out.data.assign(out.rows * out.cols, 0.0);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    double dropped = 0.0;
    for (std::size_t c = 0; c < fm.cols; ++c)
      if (drop[c]) dropped += fm.at(r, c);
    for (std::size_t i = 0; i < keep.size(); ++i) out.at(r, i) = fm.at(r, keep[i]);
    if (unk_idx < out.cols) out.at(r, unk_idx) += dropped;
  }
  return out;
}

void write_features(const FeatureMatrix& fm, std::ostream& os) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "#features v1 rows=%zu cols=%zu window=%.6f ngram=%d bin=%.6f set=%s "
                "label_min=%d\n",
                fm.rows, fm.cols, fm.config.window_L, fm.config.ngram_n, fm.config.bin_m,
                feature_set_name(fm.config.feature_set), fm.config.label_min_events);
  os << buf;
  for (std::size_t c = 0; c < fm.cols; ++c) {
    const auto& col = fm.schema[c];
    std::snprintf(buf, sizeof(buf), "C %zu %d %d %s\n", c, static_cast<int>(col.kind),
                  static_cast<int>(col.agg), col.name.c_str());
    os << buf;
  }
  for (std::size_t r = 0; r < fm.rows; ++r) {
    os << "R " << (fm.labels[r] == Label::Malicious ? 'M' : 'B');
    for (std::size_t c = 0; c < fm.cols; ++c) {
      std::snprintf(buf, sizeof(buf), " %.17g", fm.at(r, c));
      os << buf;
    }
    os << '\n';
  }
}

FeatureMatrix read_features(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty feature file");
  FeatureMatrix fm;
  std::size_t rows = 0, cols = 0;
  char setbuf[16] = {0};
  if (std::sscanf(line.c_str(),
                  "#features v1 rows=%zu cols=%zu window=%lf ngram=%d bin=%lf set=%15s "
                  "label_min=%d",
                  &rows, &cols, &fm.config.window_L, &fm.config.ngram_n, &fm.config.bin_m,
                  setbuf, &fm.config.label_min_events) != 7)
    throw DataError("bad feature file header");
  fm.config.feature_set = parse_feature_set(setbuf);
  fm.rows = rows;
  fm.cols = cols;
  fm.schema.resize(cols);
  fm.data.assign(rows * cols, 0.0);
  fm.labels.assign(rows, Label::Benign);
  std::size_t line_no = 1;
  for (std::size_t c = 0; c < cols; ++c) {
    if (!std::getline(is, line)) throw DataError("feature file truncated in schema");
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    std::size_t idx;
    int kind, agg;
    ls >> tag >> idx >> kind >> agg;
    std::string name;
    std::getline(ls, name);
    if (!name.empty() && name[0] == ' ') name.erase(0, 1);
    if (tag != "C" || idx != c || !ls)
      throw DataError("feature file line " + std::to_string(line_no) + ": bad schema row");
    fm.schema[c] = {static_cast<ColumnKind>(kind), static_cast<AggKind>(agg), name};
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw DataError("feature file truncated in rows");
    ++line_no;
    std::istringstream ls(line);
    std::string tag, lab;
    ls >> tag >> lab;
    if (tag != "R" || (lab != "B" && lab != "M"))
      throw DataError("feature file line " + std::to_string(line_no) + ": bad data row");
    fm.labels[r] = lab == "M" ? Label::Malicious : Label::Benign;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(ls >> fm.at(r, c)))
        throw DataError("feature file line " + std::to_string(line_no) + ": short row");
    }
  }
  return fm;
}

void write_features_file(const FeatureMatrix& fm, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_features(fm, os);
}

FeatureMatrix read_features_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_features(is);
}

}  // namespace traceguard
