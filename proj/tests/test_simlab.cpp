#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "fsbgl/basis.hpp"
#include "fsbgl/common.hpp"
#include "fsbgl/covkernels.hpp"
#include "fsbgl/likelihood.hpp"
#include "fsbgl/points.hpp"
#include "fsbgl/simlab.hpp"

using namespace fsbgl;

TEST_SUITE("simlab") {

TEST_CASE("block graph: loaded diagonal, block couplings, positive definite") {
  PrecisionGraphSpec spec;
  spec.kind = GraphKind::BlockDiagonal;
  spec.dim = 22;
  spec.block_size = 11;
  spec.block_value = -0.4;
  const Eigen::MatrixXd Q = make_precision(spec).to_dense();
  // Gershgorin load: row sum 4.0, margin 5% above the unit baseline.
  CHECK(Q(0, 0) == doctest::Approx(4.15).epsilon(1e-12));
  for (int i = 0; i < 22; ++i) CHECK(Q(i, i) == doctest::Approx(Q(0, 0)));
  CHECK(Q(0, 1) == doctest::Approx(-0.4));
  CHECK(Q(3, 9) == doctest::Approx(-0.4));
  CHECK(Q(0, 11) == 0.0);
  CHECK(Q(10, 12) == 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("unit blocks collapse to a scaled identity") {
  PrecisionGraphSpec spec;
  spec.kind = GraphKind::BlockDiagonal;
  spec.dim = 9;
  spec.block_size = 1;
  const Eigen::MatrixXd Q = make_precision(spec).to_dense();
  const double c = Q(0, 0);
  CHECK(c > 0.0);
  CHECK((Q - c * Eigen::MatrixXd::Identity(9, 9)).norm() == 0.0);
}

TEST_CASE("hub graph wiring and load") {
  PrecisionGraphSpec spec;
  spec.kind = GraphKind::HubAndSpoke;
  spec.dim = 121;
  spec.hub_count = 11;
  spec.spoke_degree = 10;
  spec.hub_value = -0.3;
  const Eigen::MatrixXd Q = make_precision(spec).to_dense();
  CHECK(Q(0, 0) == doctest::Approx(3.1).epsilon(1e-12));
  // Hub 0 sits at index 0 and touches the next ten indices.
  for (int s = 1; s <= 10; ++s) CHECK(Q(0, s) == doctest::Approx(-0.3));
  CHECK(Q(1, 2) == 0.0);    // spokes are not wired to each other
  CHECK(Q(0, 11) == 0.0);   // next hub's block
  CHECK(Q(11, 12) == doctest::Approx(-0.3));
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  CHECK(llt.info() == Eigen::Success);

  spec.dim = 120;  // 11 * 11 != 120
  CHECK_THROWS_AS(make_precision(spec), domain_error);
}

TEST_CASE("random graph: deterministic in the seed, plausible edge count") {
  PrecisionGraphSpec spec;
  spec.kind = GraphKind::RandomGraph;
  spec.dim = 121;
  spec.edge_prob = 0.04;
  spec.edge_value = -0.25;
  spec.seed = 7;
  const SparseSymmetric Q1 = make_precision(spec);
  const SparseSymmetric Q2 = make_precision(spec);
  CHECK((Q1.to_dense() - Q2.to_dense()).norm() == 0.0);
  spec.seed = 8;
  const SparseSymmetric Q3 = make_precision(spec);
  CHECK((Q1.to_dense() - Q3.to_dense()).norm() != 0.0);

  const int edges = static_cast<int>(Q1.nnz_upper()) - 121;
  CHECK(edges > 150);
  CHECK(edges < 450);
  Eigen::LLT<Eigen::MatrixXd> llt(Q1.to_dense());
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("graph names round-trip") {
  for (GraphKind k : {GraphKind::BlockDiagonal, GraphKind::HubAndSpoke,
                      GraphKind::RandomGraph})
    CHECK(graph_from_name(graph_name(k)) == k);
  CHECK_THROWS_AS(graph_from_name("lattice"), domain_error);
}

TEST_CASE("simulation is bitwise deterministic in the seed") {
  const PointSet pts = grid_points(6, 6);
  BasisSpec basis;
  basis.kind = BasisKind::WendlandLattice;
  basis.levels = 1;
  const Eigen::MatrixXd Psi = basis.evaluate(pts);
  PrecisionGraphSpec gspec;
  gspec.kind = GraphKind::BlockDiagonal;
  gspec.dim = 4;
  gspec.block_size = 2;
  const SparseSymmetric Q = make_precision(gspec);
  SmallScaleSpec spec;
  spec.family = Family::GaspariCohn;
  spec.params = {0.5, 0.12};
  spec.tau2 = 0.05;

  const SpatialDataset a = simulate_fields(pts, Q, Psi, spec, 5, 101);
  const SpatialDataset b = simulate_fields(pts, Q, Psi, spec, 5, 101);
  CHECK(a.Y.rows() == 36);
  CHECK(a.Y.cols() == 5);
  CHECK((a.Y - b.Y).norm() == 0.0);
  const SpatialDataset c = simulate_fields(pts, Q, Psi, spec, 5, 102);
  CHECK((a.Y - c.Y).norm() != 0.0);
}

TEST_CASE("nugget-only simulation has the right noise scale") {
  const int n = 100, m = 200;
  Rng rng(55);
  PointSet pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  SparseSymmetric Q = SparseSymmetric::identity(1);
  const Eigen::MatrixXd Psi = Eigen::MatrixXd::Zero(n, 1);
  SmallScaleSpec spec;
  spec.family = Family::PureNugget;
  spec.tau2 = 0.25;
  const SpatialDataset data = simulate_fields(pts, Q, Psi, spec, m, 17);
  const double var = data.Y.array().square().mean();
  const double bound = 3.0 * 0.25 * std::sqrt(2.0 / (double(n) * m));
  CHECK(std::abs(var - 0.25) <= bound);
  CHECK(std::abs(data.Y.mean()) <= 3.0 * std::sqrt(0.25 / (double(n) * m)));
}

TEST_CASE("sample covariance approaches the model covariance") {
  const int n = 10, m = 20000;
  const PointSet pts = grid_points(5, 2);
  BasisSpec basis;
  basis.kind = BasisKind::WendlandLattice;
  basis.levels = 1;
  basis.overlap = 2.0;
  const Eigen::MatrixXd Psi = basis.evaluate(pts);
  PrecisionGraphSpec gspec;
  gspec.kind = GraphKind::BlockDiagonal;
  gspec.dim = 4;
  gspec.block_size = 2;
  gspec.block_value = -0.4;
  const SparseSymmetric Q = make_precision(gspec);
  SmallScaleSpec spec;
  spec.family = Family::GaspariCohn;
  spec.params = {0.3, 0.15};
  spec.tau2 = 0.1;

  const SpatialDataset data = simulate_fields(pts, Q, Psi, spec, m, 29);
  const Eigen::MatrixXd S = data.Y * data.Y.transpose() / double(m);
  const Eigen::MatrixXd Sigma =
      Psi * Q.to_dense().inverse() * Psi.transpose() +
      assemble_D(pts, spec).to_dense();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double sd =
          std::sqrt((Sigma(i, i) * Sigma(j, j) + Sigma(i, j) * Sigma(i, j)) /
                    double(m));
      CHECK(std::abs(S(i, j) - Sigma(i, j)) <= 4.0 * sd);
    }
  }
}

TEST_CASE("parameter name tables") {
  CHECK(family_param_names(Family::TaperedMatern, 4) ==
        std::vector<std::string>{"sigma2", "r", "nu", "theta"});
  CHECK(family_param_names(Family::GaspariCohn, 2) ==
        std::vector<std::string>{"sigma2", "c"});
  CHECK(family_param_names(Family::WendlandMixture, 2) ==
        std::vector<std::string>{"alpha1", "theta1"});
  CHECK(family_param_names(Family::WendlandMixture, 4) ==
        std::vector<std::string>{"alpha1", "theta1", "alpha2", "theta2"});
  CHECK(family_param_names(Family::PureNugget, 0).empty());
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
  CHECK(median({7.0}) == 7.0);
}

TEST_CASE("recovery report on exact and degenerate estimates") {
  PrecisionGraphSpec gspec;
  gspec.kind = GraphKind::BlockDiagonal;
  gspec.dim = 6;
  gspec.block_size = 3;
  const Eigen::MatrixXd Qt = make_precision(gspec).to_dense();

  const PointSet pts = grid_points(5, 4);
  SmallScaleSpec truth;
  truth.family = Family::GaspariCohn;
  truth.params = {0.6, 0.2};
  truth.tau2 = 0.08;
  SpatialDataset data;
  data.locations = pts;
  Rng rng(31);
  data.Y.resize(pts.rows(), 6);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < pts.rows(); ++i) data.Y(i, j) = rng.normal();
  BasisSpec basis;
  basis.kind = BasisKind::WendlandLattice;
  basis.levels = 1;
  Eigen::MatrixXd Psi = basis.evaluate(pts);
  Psi.conservativeResize(Eigen::NoChange, 6);
  Psi.rightCols(2).setZero();
  const SufficientStats st =
      center_and_stats(data, Psi, assemble_D(pts, truth));

  const RecoveryReport same =
      recovery_report(Qt, Qt, truth, truth, st, st);
  CHECK(same.rel_frobenius == 0.0);
  CHECK(same.missed_nonzero_pct == 0.0);
  CHECK(same.missed_zero_pct == 0.0);
  CHECK(same.likelihood_ratio == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& [k, v] : same.param_abs_err) CHECK(v == 0.0);
  CHECK(same.param_abs_err.count("log10_tau2") == 1);
  CHECK(same.param_abs_err.count("sigma2") == 1);

  // A diagonal estimate misses every true edge and adds none.
  const Eigen::MatrixXd Qd = Qt.diagonal().asDiagonal();
  const RecoveryReport diag = recovery_report(Qd, Qt, truth, truth, st, st);
  CHECK(diag.missed_nonzero_pct == doctest::Approx(100.0));
  CHECK(diag.missed_zero_pct == 0.0);

  // Scaled identity against identity: pure relative frobenius.
  const Eigen::MatrixXd I6 = Eigen::MatrixXd::Identity(6, 6);
  const RecoveryReport scaled =
      recovery_report(1.2 * I6, I6, truth, truth, st, st);
  CHECK(scaled.rel_frobenius == doctest::Approx(0.2).epsilon(1e-12));

  // Parameter errors against a shifted spec.
  SmallScaleSpec other = truth;
  other.params = {0.9, 0.15};
  other.tau2 = 0.8;
  const RecoveryReport shifted =
      recovery_report(Qt, Qt, other, truth, st, st);
  CHECK(shifted.param_abs_err.at("sigma2") == doctest::Approx(0.3));
  CHECK(shifted.param_abs_err.at("c") == doctest::Approx(0.05));
  CHECK(shifted.param_abs_err.at("log10_tau2") ==
        doctest::Approx(std::abs(std::log10(0.8) - std::log10(0.08))));
}

TEST_CASE("recovery report is invariant to site relabeling") {
  const PointSet pts = grid_points(5, 4);
  const int n = static_cast<int>(pts.rows());
  SmallScaleSpec spec;
  spec.family = Family::GaspariCohn;
  spec.params = {0.5, 0.25};
  spec.tau2 = 0.1;
  BasisSpec basis;
  basis.kind = BasisKind::WendlandLattice;
  basis.levels = 1;

  SpatialDataset data;
  data.locations = pts;
  Rng rng(77);
  data.Y.resize(n, 8);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < n; ++i) data.Y(i, j) = rng.normal();

  // Reverse-order relabeling of the sites.
  SpatialDataset rev;
  rev.locations.resize(n, 2);
  rev.Y.resize(n, 8);
  for (int i = 0; i < n; ++i) {
    rev.locations.row(i) = data.locations.row(n - 1 - i);
    rev.Y.row(i) = data.Y.row(n - 1 - i);
  }

  const SufficientStats st_a = center_and_stats(
      data, basis.evaluate(data.locations), assemble_D(data.locations, spec));
  const SufficientStats st_b = center_and_stats(
      rev, basis.evaluate(rev.locations), assemble_D(rev.locations, spec));

  PrecisionGraphSpec gspec;
  gspec.kind = GraphKind::BlockDiagonal;
  gspec.dim = 4;
  gspec.block_size = 2;
  const Eigen::MatrixXd Qt = make_precision(gspec).to_dense();
  const Eigen::MatrixXd Qh = 0.9 * Qt;

  const RecoveryReport a = recovery_report(Qh, Qt, spec, spec, st_a, st_a);
  const RecoveryReport b = recovery_report(Qh, Qt, spec, spec, st_b, st_b);
  CHECK(a.rel_frobenius == b.rel_frobenius);
  CHECK(a.likelihood_ratio ==
        doctest::Approx(b.likelihood_ratio).epsilon(1e-9));
}

TEST_CASE("a one-trial study reproduces its single report in the medians") {
  StudyConfig cfg;
  cfg.graph.kind = GraphKind::BlockDiagonal;
  cfg.graph.dim = 4;
  cfg.graph.block_size = 2;
  cfg.truth.family = Family::GaspariCohn;
  cfg.truth.params = {1.0, 0.1};
  cfg.truth.tau2 = 0.05;
  cfg.fit_family = Family::GaspariCohn;
  cfg.anneal = default_anneal(Family::GaspariCohn);
  cfg.anneal.max_steps = 15;
  cfg.anneal.init_scan = 4;
  cfg.anneal.window = 8;
  cfg.anneal.polish_sweeps = 1;
  cfg.basis.kind = BasisKind::WendlandLattice;
  cfg.basis.levels = 1;
  cfg.grid_nx = 8;
  cfg.grid_ny = 8;
  cfg.m_list = {4};
  cfg.trials = 1;
  cfg.lambda_grid = {1.0, 0.1};

  const StudyResult res = run_study(cfg);
  CHECK(res.failures == 0);
  REQUIRE(res.outcomes.size() == 1);
  const TrialOutcome& t = res.outcomes[0];
  REQUIRE(t.ok);
  const auto& med = res.medians.at(4);
  CHECK(med.at("rel_frobenius") == t.report.rel_frobenius);
  CHECK(med.at("missed_nonzero_pct") == t.report.missed_nonzero_pct);
  CHECK(med.at("missed_zero_pct") == t.report.missed_zero_pct);
  CHECK(med.at("likelihood_ratio") == t.report.likelihood_ratio);
  CHECK(med.at("lambda_best") == t.lambda_best);
  CHECK(med.at("err_sigma2") == t.report.param_abs_err.at("sigma2"));
  CHECK(med.at("err_log10_tau2") ==
        t.report.param_abs_err.at("log10_tau2"));

  // Same configuration, same bits.
  const StudyResult again = run_study(cfg);
  CHECK(again.medians.at(4).at("rel_frobenius") ==
        med.at("rel_frobenius"));
  CHECK(again.medians.at(4).at("err_c") == med.at("err_c"));

  // Thread count must not affect the numbers.
  StudyConfig threaded = cfg;
  threaded.threads = 2;
  threaded.trials = 2;
  StudyConfig serial = cfg;
  serial.trials = 2;
  const StudyResult r2 = run_study(threaded);
  const StudyResult r1 = run_study(serial);
  REQUIRE(r2.outcomes.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r1.outcomes[i].ok == r2.outcomes[i].ok);
    CHECK(r1.outcomes[i].report.rel_frobenius ==
          r2.outcomes[i].report.rel_frobenius);
  }

  const std::string csv = study_csv(res, cfg);
  CHECK(csv.find("metric,truth,m=4") != std::string::npos);
  CHECK(csv.find("rel_frobenius") != std::string::npos);
  CHECK(csv.find("err_log10_tau2") != std::string::npos);
  CHECK(csv.find("failures") != std::string::npos);
}

TEST_CASE("study validation") {
  StudyConfig cfg;
  cfg.basis.kind = BasisKind::WendlandLattice;
  cfg.basis.levels = 1;
  cfg.graph.dim = 4;
  cfg.graph.block_size = 2;
  cfg.truth.family = Family::GaspariCohn;
  cfg.truth.params = {1.0, 0.1};
  cfg.truth.tau2 = 0.05;
  cfg.fit_family = Family::GaspariCohn;
  cfg.anneal = default_anneal(Family::GaspariCohn);
  cfg.grid_nx = 6;
  cfg.grid_ny = 6;

  StudyConfig bad = cfg;
  bad.m_list = {1};
  CHECK_THROWS_AS(run_study(bad), domain_error);
  bad = cfg;
  bad.m_list.clear();
  CHECK_THROWS_AS(run_study(bad), domain_error);
  bad = cfg;
  bad.trials = 0;
  CHECK_THROWS_AS(run_study(bad), domain_error);
  bad = cfg;
  bad.lambda_grid.clear();
  CHECK_THROWS_AS(run_study(bad), domain_error);
  bad = cfg;
  bad.graph.dim = 5;  // disagrees with the 4-column basis
  CHECK_THROWS_AS(run_study(bad), domain_error);
}

}  // TEST_SUITE
