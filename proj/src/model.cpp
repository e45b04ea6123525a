#include "traceguard/model.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace traceguard {

DetectorModel train_detector(const FeatureMatrix& benign_fm, const SvmConfig& svm_config,
                             double pca_variance, const Vocabulary* vocab,
                             std::uint64_t train_seed) {
  svm_config.validate();
  if (pca_variance <= 0.0 || pca_variance > 1.0)
    throw ConfigError("pca_variance: must be in (0, 1]");
  for (std::size_t r = 0; r < benign_fm.rows; ++r)
    if (benign_fm.labels[r] == Label::Malicious)
      throw DataError("training contamination: malicious label at row " + std::to_string(r));
  if (benign_fm.rows < 10)
    throw DataError("training requires at least 10 benign rows, got " +
                    std::to_string(benign_fm.rows));

  DetectorModel model;
  model.schema_fp = benign_fm.schema_fingerprint();
  model.schema = benign_fm.schema;
  if (vocab) {
    model.has_vocab = true;
    model.vocab = *vocab;
  }
  model.svm_config = svm_config;
  model.feature_config = benign_fm.config;
  model.pca_variance = pca_variance;
  model.train_seed = train_seed;
  model.train_rows = static_cast<std::uint32_t>(benign_fm.rows);

  model.scaler = fit_scaler(benign_fm);
  const FeatureMatrix scaled = apply_scaler(benign_fm, model.scaler);
  model.pca = fit_pca(scaled, pca_variance);
  const Eigen::MatrixXd projected = project(to_eigen(scaled), model.pca);
  model.svm = train_oneclass(projected, svm_config);
  return model;
}

Eigen::VectorXd score_detector(const DetectorModel& model, const FeatureMatrix& fm) {
  if (fm.schema_fingerprint() != model.schema_fp) {
    std::string diff;
    const std::size_t n = std::max(fm.schema.size(), model.schema.size());
    for (std::size_t i = 0; i < n && diff.size() < 200; ++i) {
      const std::string got = i < fm.schema.size() ? fm.schema[i].name : "<absent>";
      const std::string want = i < model.schema.size() ? model.schema[i].name : "<absent>";
      if (got != want) diff += " [" + std::to_string(i) + "] " + want + " != " + got + ";";
    }
    throw DataError("feature schema does not match model:" +
                    (diff.empty() ? std::string(" width or order differs") : diff));
  }
  const FeatureMatrix scaled = apply_scaler(fm, model.scaler);
  return decision_values(model.svm, project(to_eigen(scaled), model.pca));
}

namespace {

constexpr char kMagic[4] = {'T', 'G', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}
void put_u32(std::string& out, std::uint32_t v) { put_bytes(out, &v, 4); }
void put_u64(std::string& out, std::uint64_t v) { put_bytes(out, &v, 8); }
void put_f64(std::string& out, double v) { put_bytes(out, &v, 8); }
void put_vec(std::string& out, const Eigen::VectorXd& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}
void put_mat(std::string& out, const Eigen::MatrixXd& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
}
void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}
  void read(void* p, std::size_t n) {
    if (pos_ + n > end_) throw DataError("model section truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() { std::uint32_t v; read(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; read(&v, 8); return v; }
  double f64() { double v; read(&v, 8); return v; }
  Eigen::VectorXd vec() {
    const auto n = u64();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = f64();
    return v;
  }
  Eigen::MatrixXd mat() {
    const auto r = u64();
    const auto c = u64();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::uint64_t i = 0; i < r; ++i)
      for (std::uint64_t j = 0; j < c; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f64();
    return m;
  }
  std::string str() {
    const auto n = u64();
    if (pos_ + n > end_) throw DataError("model section truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

struct Section {
  std::string name;
  std::string payload;
};

void validate_model(const DetectorModel& m) {
  const double C = m.svm.upper_bound;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m.svm.alpha.size(); ++i) {
    const double a = m.svm.alpha(i);
    if (a < -1e-12 || a > C + 1e-12)
      throw ModelInvariantError("model invariant violation: alpha out of [0, 1/(nu*l)]");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ModelInvariantError("model invariant violation: sum(alpha) != 1");
  if (m.pca.components.rows() > 0) {
    const Eigen::MatrixXd gram = m.pca.components * m.pca.components.transpose();
    const double err = (gram - Eigen::MatrixXd::Identity(m.pca.k, m.pca.k)).cwiseAbs().maxCoeff();
    if (err > 1e-8 && !m.pca.degenerate)
      throw ModelInvariantError("model invariant violation: PCA basis not orthonormal");
  }
}

}  // namespace

std::string serialize_model(const DetectorModel& m) {
  std::vector<Section> sections;
  {
    std::string s;
    put_u64(s, m.schema_fp);
    put_u32(s, m.has_vocab ? 1 : 0);
    put_f64(s, m.svm_config.nu);
    put_u32(s, static_cast<std::uint32_t>(m.svm_config.kernel));
    put_f64(s, m.svm_config.gamma);
    put_f64(s, m.svm_config.tol);
    put_u64(s, static_cast<std::uint64_t>(m.svm_config.max_iter));
    put_f64(s, m.feature_config.window_L);
    put_u32(s, static_cast<std::uint32_t>(m.feature_config.ngram_n));
    put_f64(s, m.feature_config.bin_m);
    put_u32(s, static_cast<std::uint32_t>(m.feature_config.feature_set));
    put_u32(s, static_cast<std::uint32_t>(m.feature_config.label_min_events));
    put_f64(s, m.pca_variance);
    put_u64(s, m.train_seed);
    put_u32(s, m.train_rows);
    put_u64(s, m.schema.size());
    for (const auto& col : m.schema) {
      put_u32(s, static_cast<std::uint32_t>(col.kind));
      put_u32(s, static_cast<std::uint32_t>(col.agg));
      put_str(s, col.name);
    }
    sections.push_back({"meta", std::move(s)});
  }
  {
    std::ostringstream vs;
    if (m.has_vocab) m.vocab.write(vs);
    std::string s;
    put_str(s, vs.str());
    sections.push_back({"vocab", std::move(s)});
  }
  {
    std::string s;
    put_u64(s, m.scaler.mean.size());
    for (double v : m.scaler.mean) put_f64(s, v);
    for (double v : m.scaler.stddev) put_f64(s, v);
    sections.push_back({"scaler", std::move(s)});
  }
  {
    std::string s;
    put_u32(s, static_cast<std::uint32_t>(m.pca.k));
    put_u32(s, m.pca.degenerate ? 1 : 0);
    put_vec(s, m.pca.mean);
    put_mat(s, m.pca.components);
    put_vec(s, m.pca.explained_variance);
    put_vec(s, m.pca.explained_ratio);
    sections.push_back({"pca", std::move(s)});
  }
  {
    std::string s;
    put_mat(s, m.svm.support_vectors);
    put_vec(s, m.svm.alpha);
    put_f64(s, m.svm.rho);
    put_f64(s, m.svm.gamma);
    put_u32(s, static_cast<std::uint32_t>(m.svm.kernel));
    put_f64(s, m.svm.upper_bound);
    put_f64(s, m.svm.final_kkt);
    put_u64(s, static_cast<std::uint64_t>(m.svm.iterations));
    sections.push_back({"svm", std::move(s)});
  }

  std::string out;
  put_bytes(out, kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(sections.size()));
  // Section table: 8-char name, offset, size. Offsets are from file start.
  std::size_t offset = out.size() + sections.size() * 24;
  std::string table;
  for (const auto& sec : sections) {
    char name[8] = {0};
    std::memcpy(name, sec.name.data(), std::min<std::size_t>(8, sec.name.size()));
    put_bytes(table, name, 8);
    put_u64(table, offset);
    put_u64(table, sec.payload.size());
    offset += sec.payload.size();
  }
  out += table;
  for (const auto& sec : sections) out += sec.payload;
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
  put_u32(out, crc);
  return out;
}

DetectorModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ModelVersionError("not a detector model file");
  const std::string body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  if (crc != stored_crc) throw ModelChecksumError("model checksum mismatch");

  Reader head(bytes, 4, body.size());
  const auto version = head.u32();
  if (version != kVersion)
    throw ModelVersionError("unsupported model version " + std::to_string(version));
  const auto n_sections = head.u32();
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> table;
  std::size_t pos = 12;
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    Reader r(bytes, pos, body.size());
    char name[9] = {0};
    r.read(name, 8);
    const auto off = r.u64();
    const auto size = r.u64();
    if (off + size > body.size()) throw ModelChecksumError("model section out of bounds");
    table[name] = {off, size};
    pos += 24;
  }
  auto section = [&](const char* name) {
    auto it = table.find(name);
    if (it == table.end()) throw ModelVersionError(std::string("model missing section ") + name);
    return Reader(bytes, it->second.first, it->second.first + it->second.second);
  };

  DetectorModel m;
  {
    Reader r = section("meta");
    m.schema_fp = r.u64();
    m.has_vocab = r.u32() != 0;
    m.svm_config.nu = r.f64();
    m.svm_config.kernel = static_cast<KernelKind>(r.u32());
    m.svm_config.gamma = r.f64();
    m.svm_config.tol = r.f64();
    m.svm_config.max_iter = static_cast<long>(r.u64());
    m.feature_config.window_L = r.f64();
    m.feature_config.ngram_n = static_cast<int>(r.u32());
    m.feature_config.bin_m = r.f64();
    m.feature_config.feature_set = static_cast<FeatureSet>(r.u32());
    m.feature_config.label_min_events = static_cast<int>(r.u32());
    m.pca_variance = r.f64();
    m.train_seed = r.u64();
    m.train_rows = r.u32();
    const auto n_cols = r.u64();
    for (std::uint64_t i = 0; i < n_cols; ++i) {
      Column col;
      col.kind = static_cast<ColumnKind>(r.u32());
      col.agg = static_cast<AggKind>(r.u32());
      col.name = r.str();
      m.schema.push_back(std::move(col));
    }
  }
  {
    Reader r = section("vocab");
    const std::string text = r.str();
    if (m.has_vocab) {
      std::istringstream vs(text);
      m.vocab = Vocabulary::read(vs);
    }
  }
  {
    Reader r = section("scaler");
    const auto n = r.u64();
    m.scaler.mean.resize(n);
    m.scaler.stddev.resize(n);
    for (auto& v : m.scaler.mean) v = r.f64();
    for (auto& v : m.scaler.stddev) v = r.f64();
  }
  {
    Reader r = section("pca");
    m.pca.k = static_cast<int>(r.u32());
    m.pca.degenerate = r.u32() != 0;
    m.pca.mean = r.vec();
    m.pca.components = r.mat();
    m.pca.explained_variance = r.vec();
    m.pca.explained_ratio = r.vec();
  }
  {
    Reader r = section("svm");
    m.svm.support_vectors = r.mat();
    m.svm.alpha = r.vec();
    m.svm.rho = r.f64();
    m.svm.gamma = r.f64();
    m.svm.kernel = static_cast<KernelKind>(r.u32());
    m.svm.upper_bound = r.f64();
    m.svm.final_kkt = r.f64();
    m.svm.iterations = static_cast<long>(r.u64());
  }
  validate_model(m);
  return m;
}

void save_model(const DetectorModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("write failed: " + path);
}

DetectorModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace traceguard
