#pragma once
// Scalar covariance families and assembly of the small-scale covariance D.
//
// Families:
//   TaperedMatern   params (sigma2, r, nu, theta): sigma2 * matern * wendland
//   GaspariCohn     params (sigma2, c): sigma2 * normalized self-convolution
//   WendlandMixture params (alpha_1, theta_1[, alpha_2, theta_2])
//   PureNugget      no params: D = tau2 * I (the degenerate BGL configuration)
// All specs carry a nugget tau2 added to the diagonal and a distance metric.

#include <string>
#include <vector>

#include "fsbgl/points.hpp"
#include "fsbgl/sparse.hpp"

namespace fsbgl {

enum class Family { TaperedMatern, GaspariCohn, WendlandMixture, PureNugget };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct SmallScaleSpec {
  Family family = Family::PureNugget;
  std::vector<double> params;  // layout per family, see above
  double tau2 = 0.0;
  Metric metric = Metric::Euclidean;

  void validate() const;        // throws domain_error
  double support() const;       // taper radius: theta | 2c | max theta_i | 0
  double variance0() const;     // C2(0), without the nugget
  double evaluate(double d) const;  // C2(d), without the nugget
  int free_param_count() const;     // |p| for cAIC: params + tau2
  std::string describe() const;
};

// Matern correlation 2^{1-nu}/Gamma(nu) (d/r)^nu K_nu(d/r), log-space Bessel,
// underflow clamped to 0.
double matern(double d, double r, double nu);

// Wendland correlation (1/3)(1-d/theta)^6_+ (35(d/theta)^2+18(d/theta)+3).
double wendland(double d, double theta);

// Normalized Gaspari-Cohn self-convolution for a = -0.1: piecewise closed
// form of the R^3 radial convolution B0*B0, 1 at 0, exactly 0 for d >= 2c,
// negative lobe near d ~ 0.68c.
double gaspari_cohn(double d, double c);

double tapered_matern(double d, double sigma2, double r, double nu,
                      double theta);

double wendland_mixture(double d, const std::vector<double>& alpha_theta);

// D[i,j] = C2(d(x_i,x_j)) + tau2*1{i=j}; off-diagonal entries with
// |value| < 1e-14 or d >= support are omitted.
SparseSymmetric assemble_D(const PointSet& locations,
                           const SmallScaleSpec& spec);

}  // namespace fsbgl
