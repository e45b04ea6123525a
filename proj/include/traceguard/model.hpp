#ifndef TRACEGUARD_MODEL_HPP
#define TRACEGUARD_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "traceguard/features.hpp"
#include "traceguard/pca.hpp"
#include "traceguard/svm.hpp"

namespace traceguard {

struct ModelVersionError : DataError {
  using DataError::DataError;
};
struct ModelChecksumError : DataError {
  using DataError::DataError;
};
struct ModelInvariantError : DataError {
  using DataError::DataError;
};

// Full persisted pipeline: vocabulary + scaler + PCA basis + one-class SVM.
struct DetectorModel {
  std::uint64_t schema_fp = 0;
  bool has_vocab = false;
  Vocabulary vocab;
  std::vector<Column> schema;
  ScalerStats scaler;
  PcaModel pca;
  SvmModel svm;
  SvmConfig svm_config;
  FeatureConfig feature_config;
  double pca_variance = 0.95;
  std::uint64_t train_seed = 0;
  std::uint32_t train_rows = 0;
};

// Fits scaler -> PCA -> one-class SVM on benign-only windows. Throws
// DataError on contaminated training labels or fewer than 10 rows.
DetectorModel train_detector(const FeatureMatrix& benign_fm, const SvmConfig& svm_config,
                             double pca_variance = 0.95,
                             const Vocabulary* vocab = nullptr,
                             std::uint64_t train_seed = 0);

// Per-row decision values f(x); f < 0 marks anomalous windows. Throws
// DataError naming the differing columns on schema mismatch.
Eigen::VectorXd score_detector(const DetectorModel& model, const FeatureMatrix& fm);

// Versioned binary container: magic, format version, section table
// (meta/vocab/scaler/pca/svm), little-endian 64-bit floats, trailing CRC32.
// load validates dual and PCA invariants and refuses corrupt files.
std::string serialize_model(const DetectorModel& model);
DetectorModel deserialize_model(const std::string& bytes);
void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);

}  // namespace traceguard

#endif  // TRACEGUARD_MODEL_HPP
