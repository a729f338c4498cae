#pragma once
// Cholesky factorization of the small-scale covariance D.
//
// One interface, two backends: a sparse LDLT with fill-reducing ordering for
// genuinely sparse D, and a dense LAPACK factorization when D's density makes
// the dense path faster (taper supports at study scale fill 10-25% of D).
// Routing is an internal performance detail; results agree to rounding.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>

#include "fsbgl/sparse.hpp"

namespace fsbgl {

class CholeskyD {
 public:
  // context appears in error messages ("not positive definite: <context>").
  explicit CholeskyD(const SparseSymmetric& D, const std::string& context = "");
  // Dense fast path: takes ownership, factorizes in place.
  explicit CholeskyD(Eigen::MatrixXd&& D, const std::string& context = "");

  int dim() const { return n_; }
  double logdet() const { return logdet_; }
  bool dense_backend() const { return dense_; }

  // D^{-1} B
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  // W with W^T W = B^T D^{-1} B (a whitening half-solve; the sparse backend
  // includes its permutation, so W is *not* triangular-solve output of B's
  // natural ordering — only Gram products of W are meaningful).
  Eigen::MatrixXd half_solve(const Eigen::MatrixXd& B) const;

  // X with cov(X) = D for iid standard normal Z: X = P^T L Z.
  Eigen::MatrixXd lower_apply(const Eigen::MatrixXd& Z) const;

 private:
  void factor_dense(Eigen::MatrixXd&& M, const std::string& context);
  void factor_sparse(const SparseSymmetric& D, const std::string& context);

  bool dense_ = false;
  int n_ = 0;
  double logdet_ = 0.0;
  Eigen::MatrixXd Lfactor_;  // dense backend, lower triangle valid
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;  // sparse backend
};

// Serializes BLAS to one thread; worker parallelism happens at trial level.
void init_linear_algebra_threads();

}  // namespace fsbgl
