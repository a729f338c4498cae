#include "fsbgl/covkernels.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fsbgl {

namespace {
// GSL must not abort the process on underflow; statuses are handled here.
const gsl_error_handler_t* const kNoAbort = gsl_set_error_handler_off();

bool pos_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::TaperedMatern: return "tapered_matern";
    case Family::GaspariCohn: return "gaspari_cohn";
    case Family::WendlandMixture: return "wendland_mixture";
    case Family::PureNugget: return "pure_nugget";
  }
  throw domain_error("unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "tapered_matern") return Family::TaperedMatern;
  if (name == "gaspari_cohn") return Family::GaspariCohn;
  if (name == "wendland_mixture") return Family::WendlandMixture;
  if (name == "pure_nugget") return Family::PureNugget;
  throw domain_error("unknown covariance family: " + name);
}

double matern(double d, double r, double nu) {
  if (!pos_finite(r) || !pos_finite(nu))
    throw domain_error("matern: r and nu must be positive finite");
  if (d < 0.0 || !std::isfinite(d)) throw domain_error("matern: d must be >= 0");
  if (d == 0.0) return 1.0;
  const double x = d / r;
  gsl_sf_result lnk;
  const int status = gsl_sf_bessel_lnKnu_e(nu, x, &lnk);
  if (status == GSL_EUNDRFLW) return 0.0;
  if (status != GSL_SUCCESS)
    throw numerical_error("matern: Bessel evaluation failed");
  const double lg = (1.0 - nu) * 0.6931471805599453 - std::lgamma(nu) +
                    nu * std::log(x) + lnk.val;
  return std::exp(lg);  // exp underflows naturally to 0 for large d/r
}

double wendland(double d, double theta) {
  if (!pos_finite(theta)) throw domain_error("wendland: theta must be positive");
  if (d < 0.0 || !std::isfinite(d)) throw domain_error("wendland: d must be >= 0");
  const double s = d / theta;
  if (s >= 1.0) return 0.0;
  const double one_m = 1.0 - s;
  const double f6 = one_m * one_m * one_m * one_m * one_m * one_m;
  return f6 * ((35.0 * s + 18.0) * s + 3.0) / 3.0;
}

double gaspari_cohn(double d, double c) {
  if (!pos_finite(c)) throw domain_error("gaspari_cohn: c must be positive");
  if (d < 0.0 || !std::isfinite(d))
    throw domain_error("gaspari_cohn: d must be >= 0");
  const double s = d / c;
  if (s >= 2.0) return 0.0;
  // Normalized R^3 radial self-convolution of the a=-0.1 kernel, derived
  // symbolically in exact rationals over the knots {1/2, 1, 3/2, 2}:
  //   s in [0,1/2): 1 - 640/69 s^2 + 185/23 s^3 + 244/23 s^4 - 258/23 s^5
  //   s in [1/2,1): -61/92/s + 313/46 - 435/23 s + 1100/69 s^2 + 125/23 s^3
  //                 - 308/23 s^4 + 110/23 s^5
  //   s in [1,3/2): 665/276/s - 503/46 + 365/23 s - 500/69 s^2 - 55/23 s^3
  //                 + 68/23 s^4 - 2/3 s^5
  //   s in [3/2,2): -16/69/s + 32/23 - 40/23 s + 40/69 s^2 + 5/23 s^3
  //                 - 4/23 s^4 + 2/69 s^5
  if (s < 0.5) {
    return 1.0 +
           s * s * (-640.0 / 69 + s * (185.0 / 23 + s * (244.0 / 23 - s * 258.0 / 23)));
  }
  if (s < 1.0) {
    return -61.0 / 92 / s + 313.0 / 46 +
           s * (-435.0 / 23 +
                s * (1100.0 / 69 +
                     s * (125.0 / 23 + s * (-308.0 / 23 + s * 110.0 / 23))));
  }
  if (s < 1.5) {
    return 665.0 / 276 / s - 503.0 / 46 +
           s * (365.0 / 23 +
                s * (-500.0 / 69 +
                     s * (-55.0 / 23 + s * (68.0 / 23 - s * 2.0 / 3))));
  }
  return -16.0 / 69 / s + 32.0 / 23 +
         s * (-40.0 / 23 +
              s * (40.0 / 69 + s * (5.0 / 23 + s * (-4.0 / 23 + s * 2.0 / 69))));
}

double tapered_matern(double d, double sigma2, double r, double nu,
                      double theta) {
  if (!pos_finite(sigma2))
    throw domain_error("tapered_matern: sigma2 must be positive");
  const double taper = wendland(d, theta);
  if (taper == 0.0) return 0.0;
  return sigma2 * matern(d, r, nu) * taper;
}

double wendland_mixture(double d, const std::vector<double>& alpha_theta) {
  if (alpha_theta.empty() || alpha_theta.size() % 2 != 0)
    throw domain_error("wendland_mixture: need (alpha, theta) pairs");
  double v = 0.0;
  for (std::size_t i = 0; i < alpha_theta.size(); i += 2) {
    const double a = alpha_theta[i], th = alpha_theta[i + 1];
    if (!pos_finite(a)) throw domain_error("wendland_mixture: alpha must be positive");
    v += a * wendland(d, th);
  }
  return v;
}

void SmallScaleSpec::validate() const {
  if (!std::isfinite(tau2) || tau2 < 0.0)
    throw domain_error("spec: tau2 must be >= 0");
  switch (family) {
    case Family::TaperedMatern:
      if (params.size() != 4)
        throw domain_error("tapered_matern spec: need (sigma2, r, nu, theta)");
      for (double p : params)
        if (!pos_finite(p))
          throw domain_error("tapered_matern spec: parameters must be positive");
      break;
    case Family::GaspariCohn:
      if (params.size() != 2)
        throw domain_error("gaspari_cohn spec: need (sigma2, c)");
      for (double p : params)
        if (!pos_finite(p))
          throw domain_error("gaspari_cohn spec: parameters must be positive");
      if (metric == Metric::GreatCircle)
        throw domain_error(
            "gaspari_cohn spec: requires chordal or Euclidean distance "
            "(positive definiteness is not guaranteed under the great-circle "
            "metric)");
      break;
    case Family::WendlandMixture:
      if (params.size() != 2 && params.size() != 4)
        throw domain_error("wendland_mixture spec: need 1 or 2 (alpha, theta) pairs");
      for (double p : params)
        if (!pos_finite(p))
          throw domain_error("wendland_mixture spec: parameters must be positive");
      break;
    case Family::PureNugget:
      if (!params.empty())
        throw domain_error("pure_nugget spec: takes no parameters");
      if (tau2 <= 0.0)
        throw domain_error("pure_nugget spec: tau2 must be positive");
      break;
  }
}

double SmallScaleSpec::support() const {
  switch (family) {
    case Family::TaperedMatern: return params[3];
    case Family::GaspariCohn: return 2.0 * params[1];
    case Family::WendlandMixture: {
      double s = 0.0;
      for (std::size_t i = 1; i < params.size(); i += 2) s = std::max(s, params[i]);
      return s;
    }
    case Family::PureNugget: return 0.0;
  }
  throw domain_error("unknown family");
}

double SmallScaleSpec::variance0() const {
  switch (family) {
    case Family::TaperedMatern: return params[0];
    case Family::GaspariCohn: return params[0];
    case Family::WendlandMixture: {
      double v = 0.0;
      for (std::size_t i = 0; i < params.size(); i += 2) v += params[i];
      return v;
    }
    case Family::PureNugget: return 0.0;
  }
  throw domain_error("unknown family");
}

double SmallScaleSpec::evaluate(double d) const {
  switch (family) {
    case Family::TaperedMatern:
      return tapered_matern(d, params[0], params[1], params[2], params[3]);
    case Family::GaspariCohn:
      return params[0] * gaspari_cohn(d, params[1]);
    case Family::WendlandMixture:
      return wendland_mixture(d, params);
    case Family::PureNugget:
      return 0.0;
  }
  throw domain_error("unknown family");
}

int SmallScaleSpec::free_param_count() const {
  return static_cast<int>(params.size()) + 1;  // + tau2
}

std::string SmallScaleSpec::describe() const {
  std::ostringstream os;
  os << family_name(family) << "(";
  for (std::size_t i = 0; i < params.size(); ++i)
    os << (i ? ", " : "") << params[i];
  os << "; tau2=" << tau2 << ")";
  return os.str();
}

SparseSymmetric assemble_D(const PointSet& locations,
                           const SmallScaleSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(locations.rows());
  if (n == 0) throw domain_error("assemble_D: empty location set");

  {  // duplicate sites make D singular; reject them
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (locations(a, 0) != locations(b, 0))
        return locations(a, 0) < locations(b, 0);
      return locations(a, 1) < locations(b, 1);
    });
    for (int i = 0; i + 1 < n; ++i)
      if (locations(idx[i], 0) == locations(idx[i + 1], 0) &&
          locations(idx[i], 1) == locations(idx[i + 1], 1))
        throw domain_error("assemble_D: duplicate locations");
  }

  SparseSymmetric D;
  D.n = n;
  const double diag = spec.variance0() + spec.tau2;
  const double radius = spec.support();
  if (radius > 0.0) {
    for (const auto& pr : neighbor_pairs(locations, radius, spec.metric)) {
      const double v = spec.evaluate(pr.d);
      if (std::abs(v) >= 1e-14) D.entries.push_back({pr.i, pr.j, v});
    }
  }
  for (int i = 0; i < n; ++i) D.entries.push_back({i, i, diag});
  D.normalize();
  return D;
}

}  // namespace fsbgl
