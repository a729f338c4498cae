#pragma once
// Penalized inverse-covariance solver:
//   argmin_{Q > 0}  -logdet(Q) + tr(G Q) + lambda * sum_{i != j} |Q_ij|
// via proximal-Newton coordinate descent on the active set with an Armijo
// line search safeguarded by positive-definiteness (Cholesky) checks.

#include <Eigen/Dense>
#include <optional>

namespace fsbgl {

struct GlassoOptions {
  double tol = 1e-6;   // max KKT residual
  int max_iter = 500;  // Newton steps
};

struct GlassoResult {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd W;  // Q^{-1} at the solution
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  double objective = 0.0;
};

// warm_start defaults to diag(1/G_ii). Throws domain_error when G has a
// non-positive diagonal (no positive-definite minimizer), numerical_error
// when the iteration cap is hit before reaching tol (result would be the
// best iterate; the throw carries the residual).
GlassoResult glasso_solve(const Eigen::MatrixXd& G, double lambda,
                          const std::optional<Eigen::MatrixXd>& warm_start =
                              std::nullopt,
                          const GlassoOptions& opts = {});

// Max KKT residual of the solution (the convergence measure):
//   diagonal:              |G - W|_ii
//   off-diagonal, Q != 0:  |(G - W)_ij + lambda sign(Q_ij)|
//   off-diagonal, Q == 0:  max(|(G - W)_ij| - lambda, 0)
double glasso_kkt_residual(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& W,
                           const Eigen::MatrixXd& G, double lambda);

}  // namespace fsbgl
