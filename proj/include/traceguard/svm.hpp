#ifndef TRACEGUARD_SVM_HPP
#define TRACEGUARD_SVM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "traceguard/types.hpp"

namespace traceguard {

enum class KernelKind : std::uint8_t { Rbf = 0, Linear = 1 };

struct SvmConfig {
  double nu = 0.05;      // upper bound on training outlier fraction, in (0, 1]
  KernelKind kernel = KernelKind::Rbf;
  double gamma = 0.0;    // <= 0 selects the `scale` rule 1/(dims * mean feature variance)
  double tol = 1e-6;     // KKT violation tolerance
  long max_iter = 100000;

  void validate() const;
};

struct SvmModel {
  Eigen::MatrixXd support_vectors;  // one row per SV
  Eigen::VectorXd alpha;            // dual coefficients, aligned with SVs
  double rho = 0.0;
  double gamma = 0.0;               // resolved value actually used
  KernelKind kernel = KernelKind::Rbf;
  double upper_bound = 0.0;         // 1/(nu * ell) at training time
  double final_kkt = 0.0;           // violation at convergence
  long iterations = 0;
};

double kernel_eval(KernelKind kernel, double gamma, const Eigen::RowVectorXd& a,
                   const Eigen::RowVectorXd& b);

// Resolved `scale` gamma: 1 / (dims * mean per-column population variance),
// falling back to 1 when the data has no variance.
double scale_gamma(const Eigen::MatrixXd& data);

// Solves the one-class dual  min ½ αᵀQα  s.t.  0 ≤ αᵢ ≤ 1/(νℓ), Σαᵢ = 1
// by maximal-violating-pair SMO with deterministic lowest-index tie-breaks.
// Throws ConvergenceError (carrying the final violation) at max_iter.
SvmModel train_oneclass(const Eigen::MatrixXd& data, const SvmConfig& config);

// Decision values f(x) = Σ αᵢ K(sᵢ, x) − ρ; f < 0 marks anomalies.
Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& data);

// ½ αᵀQα for the model's own support set (diagnostic / oracle comparison).
double dual_objective(const SvmModel& model);

}  // namespace traceguard

#endif  // TRACEGUARD_SVM_HPP
