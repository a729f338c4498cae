#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "fsbgl/basis.hpp"
#include "fsbgl/cholesky.hpp"
#include "fsbgl/common.hpp"
#include "fsbgl/covkernels.hpp"
#include "fsbgl/likelihood.hpp"
#include "fsbgl/points.hpp"

using namespace fsbgl;

namespace {

PointSet random_points(Rng& rng, int n) {
  PointSet pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  return pts;
}

Eigen::MatrixXd random_pd(Rng& rng, int k, double diag_boost) {
  Eigen::MatrixXd A(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) A(i, j) = rng.normal();
  return A * A.transpose() / k + diag_boost * Eigen::MatrixXd::Identity(k, k);
}

struct Instance {
  SpatialDataset data;
  Eigen::MatrixXd Psi;
  SmallScaleSpec spec;
  SparseSymmetric D;
};

Instance make_instance(std::uint64_t seed, int n, int m, Family family) {
  Rng rng(seed);
  Instance ins;
  ins.data.locations = random_points(rng, n);
  ins.data.Y.resize(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) ins.data.Y(i, j) = rng.normal();
  BasisSpec basis;
  basis.kind = BasisKind::CosineTensor;
  basis.m_max = 2;
  ins.Psi = basis.evaluate(ins.data.locations);
  ins.spec.family = family;
  switch (family) {
    case Family::TaperedMatern: ins.spec.params = {1.2, 0.1, 0.7, 0.3}; break;
    case Family::GaspariCohn: ins.spec.params = {0.8, 0.15}; break;
    case Family::WendlandMixture: ins.spec.params = {0.6, 0.2, 0.4, 0.5}; break;
    case Family::PureNugget: break;
  }
  ins.spec.tau2 = 0.2;
  ins.D = assemble_D(ins.data.locations, ins.spec);
  return ins;
}

}  // namespace

TEST_SUITE("likelihood") {

TEST_CASE("sufficient statistics match the dense definitions") {
  const Instance ins = make_instance(3, 35, 7, Family::TaperedMatern);
  Eigen::VectorXd mean;
  const SufficientStats st = center_and_stats(ins.data, ins.Psi, ins.D, &mean);
  CHECK(st.m == 7);
  CHECK(st.n == 35);

  const Eigen::VectorXd mu = ins.data.Y.rowwise().mean();
  CHECK((mean - mu).norm() < 1e-14);
  const Eigen::MatrixXd Yc = ins.data.Y.colwise() - mu;
  const Eigen::MatrixXd Dd = ins.D.to_dense();
  const Eigen::MatrixXd Dinv = Dd.inverse();

  CHECK((st.Gram - ins.Psi.transpose() * Dinv * ins.Psi).norm() <
        1e-8 * st.Gram.norm());
  CHECK((st.CrossData - ins.Psi.transpose() * Dinv * Yc).norm() <
        1e-8 * (st.CrossData.norm() + 1.0));
  const Eigen::MatrixXd S = Yc * Yc.transpose() / 7.0;
  CHECK(st.traceSDinv ==
        doctest::Approx((S * Dinv).trace()).epsilon(1e-8));
  Eigen::LLT<Eigen::MatrixXd> llt(Dd);
  double logdet = 0.0;
  for (int i = 0; i < 35; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  CHECK(st.logdetD == doctest::Approx(logdet).epsilon(1e-10));
}

TEST_CASE("reduced likelihood equals the dense form across families") {
  int idx = 0;
  for (Family f : {Family::TaperedMatern, Family::GaspariCohn,
                   Family::WendlandMixture, Family::PureNugget}) {
    const Instance ins = make_instance(100 + idx, 40, 5, f);
    Rng rng(200 + idx);
    const Eigen::MatrixXd Q = random_pd(rng, static_cast<int>(ins.Psi.cols()), 0.5);
    const SufficientStats st = center_and_stats(ins.data, ins.Psi, ins.D);
    const double reduced = negloglik_reduced(Q, st);
    const double full = negloglik_full(Q, ins.D, ins.data, ins.Psi);
    CHECK(std::abs(reduced - full) <= 1e-8 * std::max(1.0, std::abs(full)));
    ++idx;
  }
}

TEST_CASE("zero basis reduces to the small-scale-only objective") {
  Instance ins = make_instance(7, 25, 4, Family::GaspariCohn);
  const Eigen::MatrixXd Zero = Eigen::MatrixXd::Zero(25, 3);
  const SufficientStats st = center_and_stats(ins.data, Zero, ins.D);
  CHECK(st.Gram.norm() == 0.0);
  CHECK(st.CrossData.norm() == 0.0);
  const Eigen::MatrixXd Q = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  // logdet(Q + 0) - logdet(Q) cancels; only the D terms remain.
  CHECK(negloglik_reduced(Q, st) ==
        doctest::Approx(st.logdetD + st.traceSDinv).epsilon(1e-12));
}

TEST_CASE("penalty counts off-diagonal magnitudes only") {
  Eigen::MatrixXd Q(3, 3);
  Q << 5.0, -0.5, 0.0, -0.5, 4.0, 0.25, 0.0, 0.25, 3.0;
  CHECK(penalty(Q, 2.0) == doctest::Approx(2.0 * (0.5 + 0.5 + 0.25 + 0.25)));
  CHECK(penalty(Q, 0.0) == 0.0);
  const Instance ins = make_instance(9, 20, 3, Family::PureNugget);
  const SufficientStats st =
      center_and_stats(ins.data, Eigen::MatrixXd::Zero(20, 3), ins.D);
  const ObjectiveValue v = penalized_objective(Q, st, 2.0);
  CHECK(v.total == doctest::Approx(v.negloglik + v.penalty));
  CHECK(v.penalty == doctest::Approx(penalty(Q, 2.0)));
  CHECK(v.negloglik == doctest::Approx(negloglik_reduced(Q, st)));
}

TEST_CASE("indefinite precision is rejected") {
  const Instance ins = make_instance(11, 20, 3, Family::TaperedMatern);
  const SufficientStats st = center_and_stats(ins.data, ins.Psi, ins.D);
  Eigen::MatrixXd Q =
      -Eigen::MatrixXd::Identity(ins.Psi.cols(), ins.Psi.cols());
  CHECK_THROWS_AS(negloglik_reduced(Q, st), numerical_error);
}

}  // TEST_SUITE
