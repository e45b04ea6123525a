#ifndef TRACEGUARD_PCA_HPP
#define TRACEGUARD_PCA_HPP

#include <Eigen/Dense>

#include "traceguard/features.hpp"
#include "traceguard/types.hpp"

namespace traceguard {

struct PcaModel {
  Eigen::VectorXd mean;              // length p
  Eigen::MatrixXd components;        // k x p, orthonormal rows
  Eigen::VectorXd explained_variance;  // k eigenvalues, descending
  Eigen::VectorXd explained_ratio;     // k fractions of total variance
  int k = 0;
  bool degenerate = false;  // zero-variance training data

  int input_dim() const { return static_cast<int>(mean.size()); }
};

// Sample-covariance PCA with minimal component count reaching the cumulative
// explained-variance target. Factorizes the centered matrix (Gram trick) when
// p exceeds the row count. Sign convention: each component's
// largest-magnitude entry is positive.
PcaModel fit_pca(const FeatureMatrix& train, double variance_target = 0.95);
PcaModel fit_pca(const Eigen::MatrixXd& data, double variance_target = 0.95);

// Rows x -> components * (x - mean); labels carried through.
FeatureMatrix project(const FeatureMatrix& fm, const PcaModel& model);
Eigen::MatrixXd project(const Eigen::MatrixXd& data, const PcaModel& model);

Eigen::MatrixXd to_eigen(const FeatureMatrix& fm);

}  // namespace traceguard

#endif  // TRACEGUARD_PCA_HPP
