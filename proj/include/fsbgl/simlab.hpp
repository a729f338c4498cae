#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fsbgl/dcfit.hpp"

namespace fsbgl {

enum class GraphKind { BlockDiagonal, HubAndSpoke, RandomGraph };

std::string graph_name(GraphKind kind);
GraphKind graph_from_name(const std::string& name);

// Canonical sparse precision patterns: diagonal 1, the stated off-diagonal
// value on the pattern edges, then uniform diagonal loading past the
// Gershgorin bound whenever that bound is not already positive.
struct PrecisionGraphSpec {
  GraphKind kind = GraphKind::BlockDiagonal;
  int dim = 121;
  int block_size = 11;
  double block_value = -0.4;
  int hub_count = 11;
  int spoke_degree = 10;
  double hub_value = -0.3;
  double edge_prob = 0.04;
  double edge_value = -0.25;
  std::uint64_t seed = 7;
  double load_margin = 0.05;

  void validate() const;
};

SparseSymmetric make_precision(const PrecisionGraphSpec& spec);

// m replicates of Psi * beta + Z2 + eps with beta ~ N(0, Q^{-1}) and the
// small-scale part drawn jointly through the Cholesky factor of D.
// Draw order (fixed by contract): basis coefficients first, column-major,
// then the n x m field noise, column-major.
SpatialDataset simulate_fields(const PointSet& locations,
                               const SparseSymmetric& Q,
                               const Eigen::MatrixXd& Psi,
                               const SmallScaleSpec& spec, int m,
                               std::uint64_t seed);

struct RecoveryReport {
  double rel_frobenius = 0.0;
  double missed_nonzero_pct = 0.0;  // true edges estimated as zero
  double missed_zero_pct = 0.0;     // true zeros estimated as edges
  std::map<std::string, double> param_abs_err;  // incl. log10_tau2
  double likelihood_ratio = 1.0;    // fitted-to-true negative log-likelihood
};

// Entry classification threshold 1e-10 on |Q_hat| off-diagonals. Parameter
// errors are reported only when the fitted family matches the truth (plus
// the log10 nugget error, which is always comparable).
RecoveryReport recovery_report(const Eigen::MatrixXd& Q_hat,
                               const Eigen::MatrixXd& Q_true,
                               const SmallScaleSpec& spec_hat,
                               const SmallScaleSpec& spec_true,
                               const SufficientStats& stats_hat,
                               const SufficientStats& stats_true);

std::vector<std::string> family_param_names(Family family, std::size_t count);

struct StudyConfig {
  PrecisionGraphSpec graph;
  SmallScaleSpec truth;
  Family fit_family = Family::TaperedMatern;
  AnnealConfig anneal = default_anneal(Family::TaperedMatern);
  BasisSpec basis;  // default: cosine tensor, 121 columns
  int grid_nx = 50;
  int grid_ny = 50;
  std::vector<int> m_list{10, 100};
  int trials = 10;
  std::uint64_t master_seed = 20260815;
  std::vector<double> lambda_grid = decade_lambda_grid();
  double delta = 0.02;
  GlassoOptions inner;
  int threads = 1;
};

struct TrialOutcome {
  int trial = 0;
  int m = 0;
  bool ok = false;
  std::string error;
  double lambda_best = 0.0;  // Frobenius-best lambda on the grid
  RecoveryReport report;
};

struct StudyResult {
  std::vector<TrialOutcome> outcomes;  // trial-major, m in m_list order
  std::map<int, std::map<std::string, double>> medians;  // m -> metric
  int failures = 0;
};

// Recovery study: per trial, simulate fields from the canonical Q and the
// truth spec, fit the small-scale model by annealing, run the lambda path,
// and report recovery metrics at the Frobenius-best lambda. Replicate sets
// are nested: the m-replicate dataset is the first m columns of the largest
// simulation, so accuracy comparisons across m are paired per trial.
StudyResult run_study(const StudyConfig& config);

std::string study_csv(const StudyResult& result, const StudyConfig& config);

double median(std::vector<double> values);

}  // namespace fsbgl
