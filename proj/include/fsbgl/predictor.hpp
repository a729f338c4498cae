#pragma once

#include <vector>

#include "fsbgl/dcfit.hpp"

namespace fsbgl {

struct PredictiveDistribution {
  double mean = 0.0;
  double variance = 0.0;  // > 0; includes the nugget
  Eigen::Vector2d location{0.0, 0.0};
};

// One predictive Gaussian per (target, replicate); the variance is shared
// across replicates because the conditioning set is the same.
struct Predictions {
  Eigen::MatrixXd mean;      // targets x replicates
  Eigen::VectorXd variance;  // targets
  PointSet targets;

  std::vector<PredictiveDistribution> replicate(int r) const;
};

// Empirical-mean surface carried to arbitrary targets: bilinear on a full
// regular grid, nearest-neighbor for scattered sites.
Eigen::VectorXd interpolate_mean(const PointSet& sites,
                                 const Eigen::VectorXd& values,
                                 const PointSet& targets);

// Gaussian conditional of Y(target) given all observed sites under
// Psi Q^{-1} Psi' + D (+ nugget on the diagonal), via the Woodbury-reduced
// solve: one D factorization plus one (J+1)-sized factorization.
Predictions predict(const FittedModel& model, const SpatialDataset& observed,
                    const PointSet& targets);

double crps_gaussian(double mu, double sigma, double y);
double crps(const PredictiveDistribution& dist, double y);

struct ScoreSummary {
  double mean_crps = 0.0;
  double median_crps = 0.0;
  double rmse = 0.0;
};

ScoreSummary score(const std::vector<PredictiveDistribution>& predictions,
                   const std::vector<double>& truths);
// Flattens (target, replicate) pairs; truth laid out like Predictions::mean.
ScoreSummary score(const Predictions& predictions,
                   const Eigen::MatrixXd& truth);

}  // namespace fsbgl
