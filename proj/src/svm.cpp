#include "traceguard/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace traceguard {

void SvmConfig::validate() const {
  if (nu <= 0.0 || nu > 1.0) throw ConfigError("nu: must be in (0, 1]");
  if (tol <= 0.0) throw ConfigError("tol: must be > 0");
  if (max_iter < 1) throw ConfigError("max_iter: must be >= 1");
}

double kernel_eval(KernelKind kernel, double gamma, const Eigen::RowVectorXd& a,
                   const Eigen::RowVectorXd& b) {
  if (kernel == KernelKind::Linear) return a.dot(b);
  return std::exp(-gamma * (a - b).squaredNorm());
}

double scale_gamma(const Eigen::MatrixXd& data) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n == 0 || p == 0) return 1.0;
  const Eigen::RowVectorXd mean = data.colwise().mean();
  double var_sum = 0.0;
  for (Eigen::Index c = 0; c < p; ++c)
    var_sum += (data.col(c).array() - mean(c)).square().sum() / static_cast<double>(n);
  const double mean_var = var_sum / static_cast<double>(p);
  if (mean_var <= 1e-300) return 1.0;
  return 1.0 / (static_cast<double>(p) * mean_var);
}

namespace {

Eigen::MatrixXd gram_matrix(KernelKind kernel, double gamma, const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  if (kernel == KernelKind::Linear) return X * X.transpose();
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  Eigen::MatrixXd Q = -2.0 * (X * X.transpose());
  Q.colwise() += sq;
  Q.rowwise() += sq.transpose();
  return (-gamma * Q).array().exp().matrix();
}

}  // namespace

SvmModel train_oneclass(const Eigen::MatrixXd& data, const SvmConfig& config) {
  config.validate();
  const auto ell = data.rows();
  if (ell < 2) throw DataError("train_oneclass: need at least 2 rows");
  const double C = 1.0 / (config.nu * static_cast<double>(ell));
  const double gamma = config.gamma > 0.0 ? config.gamma : scale_gamma(data);

  const Eigen::MatrixXd Q = gram_matrix(config.kernel, gamma, data);

  // Feasible start: uniform weights satisfy Σα = 1 and α ≤ C for any ν ≤ 1.
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(ell, 1.0 / static_cast<double>(ell));
  Eigen::VectorXd grad = Q * alpha;

  const double bound_eps = C * 1e-12;
  double violation = 0.0;
  long it = 0;
  for (; it < config.max_iter; ++it) {
    // Maximal violating pair: i can grow (α_i < C, minimal gradient),
    // j can shrink (α_j > 0, maximal gradient). Lowest index wins ties.
    Eigen::Index best_i = -1, best_j = -1;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < ell; ++k) {
      if (alpha(k) < C - bound_eps && grad(k) < g_min) {
        g_min = grad(k);
        best_i = k;
      }
      if (alpha(k) > bound_eps && grad(k) > g_max) {
        g_max = grad(k);
        best_j = k;
      }
    }
    violation = g_max - g_min;
    if (best_i < 0 || best_j < 0 || violation <= config.tol) break;

    const Eigen::Index i = best_i, j = best_j;
    double curvature = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
    if (curvature <= 1e-12) curvature = 1e-12;
    double step = (grad(j) - grad(i)) / curvature;
    step = std::min(step, C - alpha(i));
    step = std::min(step, alpha(j));
    alpha(i) += step;
    alpha(j) -= step;
    grad += step * (Q.col(i) - Q.col(j));
  }
  if (it >= config.max_iter && violation > config.tol)
    throw ConvergenceError("one-class SVM did not converge: KKT violation " +
                               std::to_string(violation),
                           violation);

  // Keep support vectors only.
  std::vector<Eigen::Index> sv;
  for (Eigen::Index k = 0; k < ell; ++k)
    if (alpha(k) > bound_eps) sv.push_back(k);

  SvmModel model;
  model.kernel = config.kernel;
  model.gamma = gamma;
  model.upper_bound = C;
  model.final_kkt = std::max(violation, 0.0);
  model.iterations = it;
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), data.cols());
  model.alpha.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = data.row(sv[s]);
    model.alpha(static_cast<Eigen::Index>(s)) = alpha(sv[s]);
  }

  // ρ from margin SVs; with none free, fall back to the median kernel sum
  // over the support set.
  std::vector<double> margin_g;
  for (Eigen::Index k : sv)
    if (alpha(k) < C - std::max(bound_eps, C * 1e-8)) margin_g.push_back(grad(k));
  if (!margin_g.empty()) {
    double s = 0.0;
    for (double g : margin_g) s += g;
    model.rho = s / static_cast<double>(margin_g.size());
  } else {
    std::vector<double> g_sv;
    for (Eigen::Index k : sv) g_sv.push_back(grad(k));
    std::sort(g_sv.begin(), g_sv.end());
    const std::size_t m = g_sv.size();
    model.rho = m % 2 == 1 ? g_sv[m / 2] : 0.5 * (g_sv[m / 2 - 1] + g_sv[m / 2]);
  }
  return model;
}

Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.support_vectors.cols())
    throw DataError("decision_values: feature width mismatch");
  const auto n = data.rows();
  Eigen::VectorXd out(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double f = -model.rho;
    for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s)
      f += model.alpha(s) *
           kernel_eval(model.kernel, model.gamma, model.support_vectors.row(s), data.row(r));
    out(r) = f;
  }
  return out;
}

double dual_objective(const SvmModel& model) {
  const Eigen::MatrixXd Q = gram_matrix(model.kernel, model.gamma, model.support_vectors);
  return 0.5 * model.alpha.dot(Q * model.alpha);
}

}  // namespace traceguard
