#include "traceguard/pca.hpp"

#include <algorithm>
#include <cmath>

namespace traceguard {

Eigen::MatrixXd to_eigen(const FeatureMatrix& fm) {
  Eigen::MatrixXd m(fm.rows, fm.cols);
  for (std::size_t r = 0; r < fm.rows; ++r)
    for (std::size_t c = 0; c < fm.cols; ++c) m(r, c) = fm.at(r, c);
  return m;
}

PcaModel fit_pca(const Eigen::MatrixXd& data, double variance_target) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 2) throw DataError("fit_pca: need at least 2 rows");
  if (variance_target <= 0.0 || variance_target > 1.0)
    throw ConfigError("variance_target: must be in (0, 1]");

  PcaModel model;
  model.mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  const double total_var = centered.squaredNorm() / denom;

  Eigen::VectorXd eigvals;   // descending, full spectrum (rank-limited)
  Eigen::MatrixXd eigvecs;   // columns aligned with eigvals, length-p each
  if (p <= n) {
    const Eigen::MatrixXd cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    eigvals = es.eigenvalues().reverse();
    eigvecs = es.eigenvectors().rowwise().reverse();
  } else {
    // Gram trick: eigenvectors of X Xᵀ lifted back through Xᵀ.
    const Eigen::MatrixXd gram = centered * centered.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd gvals = es.eigenvalues().reverse();
    const Eigen::MatrixXd gvecs = es.eigenvectors().rowwise().reverse();
    eigvals = gvals;
    eigvecs.resize(p, gvals.size());
    for (Eigen::Index i = 0; i < gvals.size(); ++i) {
      Eigen::VectorXd v = centered.transpose() * gvecs.col(i);
      const double norm = v.norm();
      if (norm > 1e-14) v /= norm;
      else v.setZero();
      eigvecs.col(i) = v;
    }
  }
  for (Eigen::Index i = 0; i < eigvals.size(); ++i)
    if (eigvals(i) < 0.0) eigvals(i) = 0.0;

  if (total_var <= 1e-300) {
    model.degenerate = true;
    model.k = 1;
    model.components = eigvecs.col(0).transpose();
    model.explained_variance = Eigen::VectorXd::Zero(1);
    model.explained_ratio = Eigen::VectorXd::Zero(1);
  } else {
    Eigen::VectorXd ratios = eigvals / total_var;
    int k = 0;
    double cum = 0.0;
    while (k < ratios.size()) {
      cum += ratios(k);
      ++k;
      if (cum >= variance_target) break;
    }
    model.k = k;
    model.components = eigvecs.leftCols(k).transpose();
    model.explained_variance = eigvals.head(k);
    model.explained_ratio = ratios.head(k);
  }

  // Deterministic sign: largest-magnitude entry of each component positive;
  // ties resolved by the first such entry.
  for (int i = 0; i < model.k; ++i) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double mag = std::abs(model.components(i, j));
      if (mag > best + 1e-15) {
        best = mag;
        arg = j;
      }
    }
    if (model.components(i, arg) < 0.0) model.components.row(i) *= -1.0;
  }
  return model;
}

PcaModel fit_pca(const FeatureMatrix& train, double variance_target) {
  return fit_pca(to_eigen(train), variance_target);
}

Eigen::MatrixXd project(const Eigen::MatrixXd& data, const PcaModel& model) {
  if (data.cols() != model.input_dim())
    throw DataError("project: width mismatch (got " + std::to_string(data.cols()) +
                    ", model expects " + std::to_string(model.input_dim()) + ")");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

FeatureMatrix project(const FeatureMatrix& fm, const PcaModel& model) {
  const Eigen::MatrixXd proj = project(to_eigen(fm), model);
  FeatureMatrix out;
  out.config = fm.config;
  out.rows = fm.rows;
  out.cols = static_cast<std::size_t>(model.k);
  out.labels = fm.labels;
  for (int i = 0; i < model.k; ++i)
    out.schema.push_back({ColumnKind::Flow, AggKind::Mean, "pc" + std::to_string(i)});
  out.data.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.at(r, c) = proj(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

}  // namespace traceguard
