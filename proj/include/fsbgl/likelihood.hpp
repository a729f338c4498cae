#pragma once
// Model likelihood in full (dense oracle) and Woodbury-reduced forms.
//
// With S = (1/m) Yc Yc^T (pooled-mean centering, 1/m normalization), the
// negative log-likelihood per replicate, up to the Gaussian constant, is
//   full:    logdet(Psi Q^{-1} Psi^T + D) + tr(S (Psi Q^{-1} Psi^T + D)^{-1})
//   reduced: logdet(Q + Gram) - logdet(Q) + logdetD + traceSDinv
//            - (1/m) || L^{-1} CrossData ||_F^2,   L L^T = Q + Gram.
// The reduced form keeps the Q-independent terms so one evaluator also
// serves the small-scale parameter objective.

#include <Eigen/Dense>

#include "fsbgl/cholesky.hpp"
#include "fsbgl/dataset.hpp"

namespace fsbgl {

struct SufficientStats {
  Eigen::MatrixXd Gram;       // Psi^T D^{-1} Psi, (J+1) x (J+1)
  Eigen::MatrixXd CrossData;  // Psi^T D^{-1} Yc, (J+1) x m
  double traceSDinv = 0.0;    // tr(S D^{-1})
  double logdetD = 0.0;
  int m = 0;  // replicates
  int n = 0;  // sites
};

struct ObjectiveValue {
  double negloglik = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// All statistics from one factorization of D. Centers replicates by the
// pooled empirical mean; writes it to mean_out when given.
SufficientStats center_and_stats(const SpatialDataset& data,
                                 const Eigen::MatrixXd& Psi,
                                 const CholeskyD& Dfac,
                                 Eigen::VectorXd* mean_out = nullptr);

SufficientStats center_and_stats(const SpatialDataset& data,
                                 const Eigen::MatrixXd& Psi,
                                 const SparseSymmetric& D,
                                 Eigen::VectorXd* mean_out = nullptr);

double negloglik_reduced(const Eigen::MatrixXd& Q, const SufficientStats& st);

// Dense-oracle form; guarded to n <= 2000.
double negloglik_full(const Eigen::MatrixXd& Q, const SparseSymmetric& D,
                      const SpatialDataset& data, const Eigen::MatrixXd& Psi);

// lambda * sum_{i != j} |Q_ij| (diagonal unpenalized).
double penalty(const Eigen::MatrixXd& Q, double lambda);

ObjectiveValue penalized_objective(const Eigen::MatrixXd& Q,
                                   const SufficientStats& st, double lambda);

}  // namespace fsbgl
