#include "fsbgl/cholesky.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <mutex>

namespace fsbgl {

namespace {
// Dense is faster than simplicial LDLT once fill-in dominates; thresholds
// from benchmarks on study-scale tapers (n=2500, 20% dense: 0.33s vs 0.8s).
bool prefer_dense(int n, double density) { return n <= 4000 && density > 0.01; }
}  // namespace

extern "C" void openblas_set_num_threads(int);

void init_linear_algebra_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

CholeskyD::CholeskyD(const SparseSymmetric& D, const std::string& context) {
  init_linear_algebra_threads();
  n_ = D.n;
  if (n_ <= 0) throw domain_error("cholesky: empty matrix");
  if (prefer_dense(n_, D.density())) {
    factor_dense(D.to_dense(), context);
  } else {
    factor_sparse(D, context);
  }
}

CholeskyD::CholeskyD(Eigen::MatrixXd&& D, const std::string& context) {
  init_linear_algebra_threads();
  n_ = static_cast<int>(D.rows());
  if (n_ <= 0 || D.cols() != n_) throw domain_error("cholesky: matrix not square");
  factor_dense(std::move(D), context);
}

void CholeskyD::factor_dense(Eigen::MatrixXd&& M, const std::string& context) {
  dense_ = true;
  Lfactor_ = std::move(M);
  const int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n_, Lfactor_.data(), n_);
  if (info != 0)
    throw numerical_error("matrix not positive definite" +
                          (context.empty() ? "" : ": " + context));
  logdet_ = 0.0;
  for (int i = 0; i < n_; ++i) logdet_ += std::log(Lfactor_(i, i));
  logdet_ *= 2.0;
}

void CholeskyD::factor_sparse(const SparseSymmetric& D,
                              const std::string& context) {
  dense_ = false;
  ldlt_.compute(D.to_eigen());
  if (ldlt_.info() != Eigen::Success)
    throw numerical_error("matrix not positive definite" +
                          (context.empty() ? "" : ": " + context));
  logdet_ = 0.0;
  const auto& d = ldlt_.vectorD();
  for (int i = 0; i < n_; ++i) {
    if (!(d(i) > 0.0))
      throw numerical_error("matrix not positive definite" +
                            (context.empty() ? "" : ": " + context));
    logdet_ += std::log(d(i));
  }
}

Eigen::MatrixXd CholeskyD::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != n_) throw domain_error("cholesky solve: dimension mismatch");
  if (!dense_) return ldlt_.solve(B);
  Eigen::MatrixXd X = B;
  const int info =
      LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', n_, static_cast<int>(X.cols()),
                     Lfactor_.data(), n_, X.data(), n_);
  if (info != 0) throw numerical_error("cholesky solve failed");
  return X;
}

Eigen::MatrixXd CholeskyD::half_solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != n_) throw domain_error("cholesky half_solve: dimension mismatch");
  if (dense_) {
    Eigen::MatrixXd X = B;
    cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans,
                CblasNonUnit, n_, static_cast<int>(X.cols()), 1.0,
                Lfactor_.data(), n_, X.data(), n_);
    return X;
  }
  // P D P^T = L D_v L^T: W = D_v^{-1/2} L^{-1} P B.
  Eigen::MatrixXd X = ldlt_.permutationP() * B;
  ldlt_.matrixL().solveInPlace(X);
  X.array().colwise() *= ldlt_.vectorD().array().rsqrt();
  return X;
}

Eigen::MatrixXd CholeskyD::lower_apply(const Eigen::MatrixXd& Z) const {
  if (Z.rows() != n_) throw domain_error("cholesky lower_apply: dimension mismatch");
  if (dense_) {
    Eigen::MatrixXd X = Z;
    cblas_dtrmm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans,
                CblasNonUnit, n_, static_cast<int>(X.cols()), 1.0,
                Lfactor_.data(), n_, X.data(), n_);
    return X;
  }
  Eigen::MatrixXd X = Z;
  X.array().colwise() *= ldlt_.vectorD().array().sqrt();
  X = ldlt_.matrixL() * X;
  return ldlt_.permutationPinv() * X;
}

}  // namespace fsbgl
