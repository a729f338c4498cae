#include "fsbgl/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fsbgl/covkernels.hpp"
#include "fsbgl/likelihood.hpp"

namespace fsbgl {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477563;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

struct GridIndex {
  bool regular = false;
  std::vector<double> xs, ys;
  Eigen::MatrixXd grid;  // ys.size() x xs.size(), value at (iy, ix)
};

GridIndex index_grid(const PointSet& sites, const Eigen::VectorXd& values) {
  GridIndex gi;
  std::map<double, int> xm, ym;
  for (Eigen::Index i = 0; i < sites.rows(); ++i) {
    xm.emplace(sites(i, 0), 0);
    ym.emplace(sites(i, 1), 0);
  }
  const std::size_t nx = xm.size(), ny = ym.size();
  if (nx < 2 || ny < 2 ||
      nx * ny != static_cast<std::size_t>(sites.rows()))
    return gi;
  int c = 0;
  for (auto& kv : xm) kv.second = c++;
  c = 0;
  for (auto& kv : ym) kv.second = c++;
  Eigen::MatrixXd grid(ny, nx);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen(ny, nx);
  seen.setConstant(false);
  for (Eigen::Index i = 0; i < sites.rows(); ++i) {
    const int ix = xm.at(sites(i, 0)), iy = ym.at(sites(i, 1));
    if (seen(iy, ix)) return gi;
    seen(iy, ix) = true;
    grid(iy, ix) = values(i);
  }
  gi.regular = true;
  gi.xs.reserve(nx);
  gi.ys.reserve(ny);
  for (const auto& kv : xm) gi.xs.push_back(kv.first);
  for (const auto& kv : ym) gi.ys.push_back(kv.first);
  gi.grid = std::move(grid);
  return gi;
}

// Cell index and clamped fractional coordinate along one sorted axis.
std::pair<int, double> axis_locate(const std::vector<double>& axis, double v) {
  const int last = static_cast<int>(axis.size()) - 1;
  auto it = std::upper_bound(axis.begin(), axis.end(), v);
  int i = static_cast<int>(it - axis.begin()) - 1;
  i = std::clamp(i, 0, last - 1);
  double t = (v - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, std::clamp(t, 0.0, 1.0)};
}

}  // namespace

Eigen::VectorXd interpolate_mean(const PointSet& sites,
                                 const Eigen::VectorXd& values,
                                 const PointSet& targets) {
  if (sites.rows() != values.size())
    throw domain_error("mean interpolation: sites and values disagree");
  if (sites.rows() == 0) throw domain_error("mean interpolation: no sites");
  Eigen::VectorXd out(targets.rows());
  const GridIndex gi = index_grid(sites, values);
  if (gi.regular) {
    for (Eigen::Index t = 0; t < targets.rows(); ++t) {
      const auto [ix, fx] = axis_locate(gi.xs, targets(t, 0));
      const auto [iy, fy] = axis_locate(gi.ys, targets(t, 1));
      out(t) = (1 - fy) * ((1 - fx) * gi.grid(iy, ix) +
                           fx * gi.grid(iy, ix + 1)) +
               fy * ((1 - fx) * gi.grid(iy + 1, ix) +
                     fx * gi.grid(iy + 1, ix + 1));
    }
  } else {
    for (Eigen::Index t = 0; t < targets.rows(); ++t) {
      Eigen::Index best = 0;
      (sites.rowwise() - targets.row(t)).rowwise().squaredNorm().minCoeff(
          &best);
      out(t) = values(best);
    }
  }
  return out;
}

std::vector<PredictiveDistribution> Predictions::replicate(int r) const {
  if (r < 0 || r >= mean.cols())
    throw domain_error("predictions: replicate index out of range");
  std::vector<PredictiveDistribution> out(static_cast<std::size_t>(mean.rows()));
  for (Eigen::Index t = 0; t < mean.rows(); ++t)
    out[t] = {mean(t, r), variance(t), targets.row(t).transpose()};
  return out;
}

Predictions predict(const FittedModel& model, const SpatialDataset& observed,
                    const PointSet& targets) {
  observed.check();
  model.spec.validate();
  if (targets.rows() == 0) throw domain_error("predict: no targets");
  const Eigen::Index n = observed.n_sites();
  const Eigen::Index k = model.Q.rows();
  const Eigen::MatrixXd Psi = model.basis.evaluate(observed.locations);
  if (Psi.cols() != k)
    throw domain_error("predict: basis size does not match Q");

  const double support = model.spec.support();
  if (model.spec.tau2 <= 0.0) {
    for (Eigen::Index t = 0; t < targets.rows(); ++t)
      for (Eigen::Index i = 0; i < n; ++i)
        if (distance(targets.row(t), observed.locations.row(i),
                     model.spec.metric) == 0.0)
          throw domain_error(
              "predict: with tau2 = 0 targets must be distinct from observed "
              "locations (target " + std::to_string(t) + ")");
  }

  const CholeskyD Dfac(assemble_D(observed.locations, model.spec),
                       "predict: small-scale covariance");
  Eigen::VectorXd mu;
  const SufficientStats st = center_and_stats(observed, Psi, Dfac, &mu);

  Eigen::LLT<Eigen::MatrixXd> Qllt(model.Q);
  if (Qllt.info() != Eigen::Success)
    throw numerical_error("predict: Q not positive definite");
  Eigen::LLT<Eigen::MatrixXd> Pllt(model.Q + st.Gram);
  if (Pllt.info() != Eigen::Success)
    throw numerical_error("predict: Q + Gram not positive definite");

  const Eigen::MatrixXd Yc = observed.Y.colwise() - mu;
  const Eigen::MatrixXd A = Dfac.solve(Psi);
  // R = Sigma^{-1} (Y - mu) by Woodbury through the reduced factorizations.
  const Eigen::MatrixXd R = Dfac.solve(Yc) - A * Pllt.solve(st.CrossData);

  const Eigen::VectorXd mu_t =
      interpolate_mean(observed.locations, mu, targets);
  const double var0 = model.spec.variance0() + model.spec.tau2;

  Predictions out;
  out.targets = targets;
  out.mean.resize(targets.rows(), st.m);
  out.variance.resize(targets.rows());

  const Eigen::Index block = 512;
  for (Eigen::Index t0 = 0; t0 < targets.rows(); t0 += block) {
    const Eigen::Index b = std::min(block, targets.rows() - t0);
    const PointSet tb = targets.middleRows(t0, b);
    const Eigen::MatrixXd Pt = model.basis.evaluate(tb);  // b x k
    const Eigen::MatrixXd QinvPt = Qllt.solve(Pt.transpose());  // k x b
    Eigen::MatrixXd Ct = Psi * QinvPt;                          // n x b
    for (Eigen::Index j = 0; j < b; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = distance(tb.row(j), observed.locations.row(i),
                                  model.spec.metric);
        if (d < support) Ct(i, j) += model.spec.evaluate(d);
      }
    }
    const Eigen::MatrixXd Zt = Dfac.solve(Ct);
    const Eigen::MatrixXd Wt = Psi.transpose() * Zt;  // k x b
    const Eigen::VectorXd prior =
        Pt.transpose().cwiseProduct(QinvPt).colwise().sum();
    const Eigen::VectorXd quad1 = Ct.cwiseProduct(Zt).colwise().sum();
    const Eigen::VectorXd quad2 =
        Wt.cwiseProduct(Pllt.solve(Wt)).colwise().sum();

    out.mean.middleRows(t0, b) =
        (Ct.transpose() * R).colwise() + mu_t.segment(t0, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const double v = prior(j) + var0 - quad1(j) + quad2(j);
      if (!(v > 0.0) || !std::isfinite(v))
        throw numerical_error("predict: conditioning failed at target " +
                              std::to_string(t0 + j));
      out.variance(t0 + j) = v;
    }
  }
  if (!out.mean.allFinite())
    throw numerical_error("predict: non-finite predictive mean");
  return out;
}

double crps_gaussian(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw domain_error("crps: sigma must be positive");
  const double z = (y - mu) / sigma;
  const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  return sigma * (z * (2.0 * Phi - 1.0) + 2.0 * phi - kInvSqrtPi);
}

double crps(const PredictiveDistribution& dist, double y) {
  return crps_gaussian(dist.mean, std::sqrt(dist.variance), y);
}

ScoreSummary score(const std::vector<PredictiveDistribution>& predictions,
                   const std::vector<double>& truths) {
  if (predictions.empty()) throw domain_error("score: no predictions");
  if (predictions.size() != truths.size())
    throw domain_error("score: predictions and truths disagree in length");
  std::vector<double> scores(predictions.size());
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    scores[i] = crps(predictions[i], truths[i]);
    sum += scores[i];
    const double e = predictions[i].mean - truths[i];
    sq += e * e;
  }
  std::sort(scores.begin(), scores.end());
  const std::size_t h = scores.size() / 2;
  ScoreSummary out;
  out.mean_crps = sum / double(scores.size());
  out.median_crps = scores.size() % 2 ? scores[h]
                                      : 0.5 * (scores[h - 1] + scores[h]);
  out.rmse = std::sqrt(sq / double(scores.size()));
  return out;
}

ScoreSummary score(const Predictions& predictions,
                   const Eigen::MatrixXd& truth) {
  if (truth.rows() != predictions.mean.rows() ||
      truth.cols() != predictions.mean.cols())
    throw domain_error("score: truth shape does not match predictions");
  std::vector<PredictiveDistribution> flat;
  std::vector<double> ys;
  flat.reserve(static_cast<std::size_t>(truth.size()));
  ys.reserve(static_cast<std::size_t>(truth.size()));
  for (Eigen::Index r = 0; r < truth.cols(); ++r) {
    for (Eigen::Index t = 0; t < truth.rows(); ++t) {
      flat.push_back({predictions.mean(t, r), predictions.variance(t),
                      predictions.targets.row(t).transpose()});
      ys.push_back(truth(t, r));
    }
  }
  return score(flat, ys);
}

}  // namespace fsbgl
