#pragma once
// Outer estimation:
//   stage 1  fit_d_params: derivative-free (annealed) search over the
//            small-scale parameters with Q = alpha I, alpha profiled out
//            exactly per proposal via a (J+1)-sized eigendecomposition;
//   stage 2  fit_Q: difference-of-convex iteration, each step solving a
//            graphical-lasso subproblem at the linearization
//            grad g(Q) = M + M B M,  M = (Q+Gram)^{-1}, B = Psi'D^-1 S D^-1 Psi;
//   model selection: cAIC over a descending lambda grid with warm starts.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsbgl/basis.hpp"
#include "fsbgl/covkernels.hpp"
#include "fsbgl/glasso.hpp"
#include "fsbgl/likelihood.hpp"

namespace fsbgl {

struct ParamBox {
  std::string name;
  double lo = 0.0, hi = 1.0;
  int steps = 10;       // grid points = steps (>= 2 unless lo == hi)
  bool log10 = false;   // grid in log10(value)
};

struct AnnealConfig {
  std::vector<ParamBox> boxes;  // family params in layout order, then tau2
  double t0 = -1.0;             // <= 0: derived from the initial scan spread
  double cooling = 0.92;
  int max_steps = 150;
  int window = 20;        // consecutive low-change steps to stop
  double rel_tol = 1e-3;  // 0.1% relative objective change
  int init_scan = 12;     // random presamples (plus the box center)
  int polish_sweeps = 2;  // zero-temperature coordinate sweeps at the end
  int nm_evals = 120;     // continuous simplex-polish budget (0 disables)
  std::uint64_t seed = 1;

  void validate(Family family) const;
};

// Default search boxes per family (wm_components selects the mixture size).
AnnealConfig default_anneal(Family family, int wm_components = 1);

struct DFit {
  SmallScaleSpec spec;  // fitted params + tau2
  double alpha = 0.0;
  double objective = 0.0;  // negloglik_reduced at (alpha I, spec)
  SufficientStats stats;   // at the fitted spec
  int evaluations = 0;
  int failures = 0;  // infeasible proposals (factorization failures)
};

DFit fit_d_params(const SpatialDataset& data, const Eigen::MatrixXd& Psi,
                  Family family, const AnnealConfig& anneal,
                  Metric metric = Metric::Euclidean);

// grad of g(Q) = logdet(Q+Gram) - tr(B (Q+Gram)^{-1}).
Eigen::MatrixXd dc_gradient(const Eigen::MatrixXd& Q,
                            const SufficientStats& st);

struct FitDiagnostics {
  std::vector<double> objective_trace;  // penalized objective per DC iterate
  std::vector<double> rel_change;       // ||Q_{j+1}-Q_j||_F / ||Q_j||_F
  int outer_iterations = 0;
  bool converged = false;
  int inner_iterations_total = 0;
  double hat_trace = 0.0;
  double df_e = 0.0;
  double caic = 0.0;
};

struct QFit {
  Eigen::MatrixXd Q;
  FitDiagnostics diag;
};

QFit fit_Q(const SufficientStats& st, double lambda, double delta = 0.02,
           const std::optional<Eigen::MatrixXd>& Q0 = std::nullopt,
           const GlassoOptions& inner = {});

struct CaicResult {
  double caic = 0.0;
  double df_e = 0.0;
  double hat_trace = 0.0;
};

// First index whose per-decade relative cAIC change against the previous
// grid point falls below flat_tol; -1 when the path never flattens.
int flattening_index(const std::vector<double>& lambdas,
                     const std::vector<double>& caics, double flat_tol);

// cAIC = -2 log-likelihood + 2 df_E with all likelihood terms retained;
// df_E = tr(H) + |p|, tr(H) = tr[(Gram+Q)^{-1} Gram].
CaicResult caic(const Eigen::MatrixXd& Q, const SmallScaleSpec& spec,
                const SufficientStats& st);

struct LambdaFit {
  double lambda = 0.0;
  QFit fit;
  CaicResult ic;
};

struct SelectionResult {
  double lambda_star = 0.0;
  int index = -1;  // into fits
  std::vector<LambdaFit> fits;
};

// Fits the grid largest-to-smallest lambda, warm-starting each fit from the
// previous solution; lambda* is the first grid point whose per-decade
// relative cAIC change drops below flat_tol, else the cAIC minimizer.
SelectionResult select_lambda(const SufficientStats& st,
                              const SmallScaleSpec& spec,
                              const std::vector<double>& lambda_grid,
                              double delta = 0.02,
                              const std::optional<Eigen::MatrixXd>& Q0 =
                                  std::nullopt,
                              const GlassoOptions& inner = {},
                              double flat_tol = 1e-4);

// Convenience form: assembles D from the spec, factorizes once, computes
// the sufficient statistics, then runs the grid.
SelectionResult select_lambda(const SpatialDataset& data,
                              const Eigen::MatrixXd& Psi,
                              const SmallScaleSpec& spec,
                              const std::vector<double>& lambda_grid,
                              double delta = 0.02,
                              const std::optional<Eigen::MatrixXd>& Q0 =
                                  std::nullopt,
                              const GlassoOptions& inner = {},
                              double flat_tol = 1e-4);

struct FittedModel {
  Eigen::MatrixXd Q;
  SmallScaleSpec spec;
  BasisSpec basis;
  double lambda = 0.0;
  double alpha = 0.0;
  FitDiagnostics diag;
};

// 10^k, k in {-1, -0.5, 0, 0.5, 1}, descending.
std::vector<double> decade_lambda_grid();
// log-spaced [0.002, 100], descending.
std::vector<double> wide_lambda_grid(int points_per_decade = 2);

}  // namespace fsbgl
