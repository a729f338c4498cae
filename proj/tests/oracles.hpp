#pragma once
// Independent reference implementations the tests compare against:
// quadrature, finite differences, grid-refinement minimization, and dense
// conditioning. Deliberately simple and slow.

#include <Eigen/Dense>

#include "fsbgl/basis.hpp"
#include "fsbgl/covkernels.hpp"
#include "fsbgl/likelihood.hpp"

namespace oracles {

// Normalized R^3 radial self-convolution of the piecewise-linear a = -0.1
// kernel, by composite Simpson panels split at every integrand kink.
double gc_quadrature(double d, double c);

// g(Q) = logdet(Q + Gram) - tr(B (Q + Gram)^{-1}), B = Cross Cross^T / m.
double dc_objective(const Eigen::MatrixXd& Q, const fsbgl::SufficientStats& st);

// Central finite differences of dc_objective, resolved to entrywise
// gradient convention (off-diagonal directions move both mirror entries).
Eigen::MatrixXd dc_gradient_fd(const Eigen::MatrixXd& Q,
                               const fsbgl::SufficientStats& st, double h);

// 2x2 penalized precision estimate by box grid refinement over
// (a, b, rho) with Q = [[a, rho*sqrt(ab)], [., b]].
Eigen::Matrix2d glasso2_brute(const Eigen::Matrix2d& G, double lambda);

// CRPS by direct numerical integration of (Phi - step)^2.
double crps_quadrature(double mu, double sigma, double y);

// Gaussian conditioning through the explicit joint covariance; shares the
// library's empirical-mean convention but none of its solves.
struct DenseConditional {
  Eigen::MatrixXd mean;      // targets x replicates
  Eigen::VectorXd variance;  // targets
};
DenseConditional conditional_gaussian(const fsbgl::SpatialDataset& observed,
                                      const fsbgl::PointSet& targets,
                                      const Eigen::MatrixXd& Q,
                                      const fsbgl::BasisSpec& basis,
                                      const fsbgl::SmallScaleSpec& spec);

// Small-scale objective at a fixed spec with alpha profiled by dense scan
// plus golden section (reference for the annealer's returned objective).
double profile_objective(const fsbgl::SpatialDataset& data,
                         const Eigen::MatrixXd& Psi,
                         const fsbgl::SmallScaleSpec& spec);

}  // namespace oracles
