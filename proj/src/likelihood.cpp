#include "fsbgl/likelihood.hpp"

#include <cblas.h>

#include <cmath>

namespace fsbgl {

SufficientStats center_and_stats(const SpatialDataset& data,
                                 const Eigen::MatrixXd& Psi,
                                 const CholeskyD& Dfac,
                                 Eigen::VectorXd* mean_out) {
  data.check();
  const Eigen::Index n = data.Y.rows(), m = data.Y.cols(), k = Psi.cols();
  if (Psi.rows() != n) throw domain_error("stats: Psi rows must match sites");
  if (Dfac.dim() != n) throw domain_error("stats: D dimension mismatch");

  const Eigen::VectorXd mu = data.Y.rowwise().mean();
  if (mean_out) *mean_out = mu;

  Eigen::MatrixXd B(n, k + m);
  B.leftCols(k) = Psi;
  B.rightCols(m) = data.Y.colwise() - mu;

  const Eigen::MatrixXd W = Dfac.half_solve(B);

  // C = W^T W in one symmetric rank update; then split into blocks.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(k + m, k + m);
  cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, static_cast<int>(k + m),
              static_cast<int>(n), 1.0, W.data(), static_cast<int>(n), 0.0,
              C.data(), static_cast<int>(k + m));

  SufficientStats st;
  st.Gram = C.topLeftCorner(k, k).selfadjointView<Eigen::Lower>();
  st.CrossData = C.block(k, 0, m, k).transpose();
  st.traceSDinv = C.bottomRightCorner(m, m).diagonal().sum() / double(m);
  st.logdetD = Dfac.logdet();
  st.m = static_cast<int>(m);
  st.n = static_cast<int>(n);
  if (!st.Gram.allFinite() || !st.CrossData.allFinite() ||
      !std::isfinite(st.traceSDinv) || !std::isfinite(st.logdetD))
    throw numerical_error("stats: non-finite sufficient statistics");
  return st;
}

SufficientStats center_and_stats(const SpatialDataset& data,
                                 const Eigen::MatrixXd& Psi,
                                 const SparseSymmetric& D,
                                 Eigen::VectorXd* mean_out) {
  return center_and_stats(data, Psi, CholeskyD(D, "small-scale covariance"),
                          mean_out);
}

namespace {

double logdet_llt(const Eigen::MatrixXd& M, const char* what,
                  Eigen::LLT<Eigen::MatrixXd>* keep = nullptr) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw numerical_error(std::string(what) + " not positive definite");
  double ld = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < M.rows(); ++i) ld += std::log(L(i, i));
  if (keep) *keep = std::move(llt);
  return 2.0 * ld;
}

}  // namespace

double negloglik_reduced(const Eigen::MatrixXd& Q, const SufficientStats& st) {
  const Eigen::Index k = st.Gram.rows();
  if (Q.rows() != k || Q.cols() != k)
    throw domain_error("negloglik_reduced: Q dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt_sum;
  const double logdet_sum = logdet_llt(Q + st.Gram, "Q + Gram", &llt_sum);
  const double logdet_q = logdet_llt(Q, "Q");

  Eigen::MatrixXd T = st.CrossData;
  llt_sum.matrixL().solveInPlace(T);
  return logdet_sum - logdet_q + st.logdetD + st.traceSDinv -
         T.squaredNorm() / double(st.m);
}

double negloglik_full(const Eigen::MatrixXd& Q, const SparseSymmetric& D,
                      const SpatialDataset& data, const Eigen::MatrixXd& Psi) {
  data.check();
  const Eigen::Index n = data.Y.rows(), m = data.Y.cols();
  if (n > 2000)
    throw domain_error("negloglik_full is an oracle, guarded to n <= 2000");
  if (Psi.rows() != n || D.n != n)
    throw domain_error("negloglik_full: dimension mismatch");

  const Eigen::VectorXd mu = data.Y.rowwise().mean();
  const Eigen::MatrixXd Yc = data.Y.colwise() - mu;
  const Eigen::MatrixXd S = Yc * Yc.transpose() / double(m);

  Eigen::LLT<Eigen::MatrixXd> lltQ(Q);
  if (lltQ.info() != Eigen::Success)
    throw numerical_error("Q not positive definite");
  const Eigen::MatrixXd Qinv =
      lltQ.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));

  Eigen::MatrixXd Sigma = D.to_dense();
  Sigma.noalias() += Psi * Qinv * Psi.transpose();

  Eigen::LLT<Eigen::MatrixXd> llt_sigma;
  const double ld = logdet_llt(Sigma, "covariance", &llt_sigma);
  const Eigen::MatrixXd SigInv =
      llt_sigma.solve(Eigen::MatrixXd::Identity(n, n));
  return ld + (S.array() * SigInv.array()).sum();
}

double penalty(const Eigen::MatrixXd& Q, double lambda) {
  if (lambda < 0.0) throw domain_error("penalty: lambda must be >= 0");
  double s = 0.0;
  for (Eigen::Index j = 0; j < Q.cols(); ++j)
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
      if (i != j) s += std::abs(Q(i, j));
  return lambda * s;
}

ObjectiveValue penalized_objective(const Eigen::MatrixXd& Q,
                                   const SufficientStats& st, double lambda) {
  ObjectiveValue v;
  v.negloglik = negloglik_reduced(Q, st);
  v.penalty = penalty(Q, lambda);
  v.total = v.negloglik + v.penalty;
  return v;
}

}  // namespace fsbgl
