#include "fsbgl/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "fsbgl/cholesky.hpp"
#include "fsbgl/likelihood.hpp"

namespace fsbgl {

std::string graph_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::BlockDiagonal: return "block_diagonal";
    case GraphKind::HubAndSpoke: return "hub_and_spoke";
    case GraphKind::RandomGraph: return "random_graph";
  }
  throw domain_error("unknown graph kind");
}

GraphKind graph_from_name(const std::string& name) {
  if (name == "block_diagonal") return GraphKind::BlockDiagonal;
  if (name == "hub_and_spoke") return GraphKind::HubAndSpoke;
  if (name == "random_graph") return GraphKind::RandomGraph;
  throw domain_error("unknown graph kind: " + name);
}

void PrecisionGraphSpec::validate() const {
  if (dim < 1) throw domain_error("precision graph: dimension must be >= 1");
  if (!(load_margin > 0.0))
    throw domain_error("precision graph: load margin must be positive");
  switch (kind) {
    case GraphKind::BlockDiagonal:
      if (block_size < 1)
        throw domain_error("precision graph: block size must be >= 1");
      break;
    case GraphKind::HubAndSpoke:
      if (hub_count < 0 || spoke_degree < 0)
        throw domain_error("precision graph: negative hub layout");
      if (static_cast<long>(hub_count) * (spoke_degree + 1) > dim)
        throw domain_error(
            "precision graph: hubs and spokes exceed the dimension");
      break;
    case GraphKind::RandomGraph:
      if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
        throw domain_error("precision graph: edge probability outside [0,1]");
      break;
  }
}

SparseSymmetric make_precision(const PrecisionGraphSpec& spec) {
  spec.validate();
  const int d = spec.dim;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
  switch (spec.kind) {
    case GraphKind::BlockDiagonal:
      for (int b0 = 0; b0 < d; b0 += spec.block_size) {
        const int b1 = std::min(b0 + spec.block_size, d);
        for (int i = b0; i < b1; ++i)
          for (int j = i + 1; j < b1; ++j)
            M(i, j) = M(j, i) = spec.block_value;
      }
      break;
    case GraphKind::HubAndSpoke:
      for (int h = 0; h < spec.hub_count; ++h) {
        const int hub = h * (spec.spoke_degree + 1);
        for (int s = 1; s <= spec.spoke_degree; ++s)
          M(hub, hub + s) = M(hub + s, hub) = spec.hub_value;
      }
      break;
    case GraphKind::RandomGraph: {
      Rng rng(spec.seed);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
          if (rng.uniform() < spec.edge_prob)
            M(i, j) = M(j, i) = spec.edge_value;
      break;
    }
  }
  double max_r = 0.0;
  for (int i = 0; i < d; ++i)
    max_r = std::max(max_r, M.row(i).cwiseAbs().sum() - M(i, i));
  const double bound = 1.0 - max_r;  // Gershgorin floor on the spectrum
  if (bound <= 0.0) {
    const double load = bound < 0.0 ? (1.0 + spec.load_margin) * -bound
                                    : spec.load_margin;
    M.diagonal().array() += load;
  }
  return SparseSymmetric::from_dense(M, 0.0);
}

SpatialDataset simulate_fields(const PointSet& locations,
                               const SparseSymmetric& Q,
                               const Eigen::MatrixXd& Psi,
                               const SmallScaleSpec& spec, int m,
                               std::uint64_t seed) {
  if (m < 1) throw domain_error("simulate: m must be >= 1");
  const Eigen::Index n = locations.rows();
  if (Psi.rows() != n)
    throw domain_error("simulate: basis rows must match locations");
  if (Q.n != Psi.cols())
    throw domain_error("simulate: Q dimension must match basis size");

  Eigen::LLT<Eigen::MatrixXd> qllt(Q.to_dense());
  if (qllt.info() != Eigen::Success)
    throw numerical_error("simulate: Q not positive definite");
  const CholeskyD dfac(assemble_D(locations, spec),
                       "simulate: small-scale covariance");

  Rng rng(seed);
  Eigen::MatrixXd Zb(Q.n, m);
  for (int c = 0; c < m; ++c)
    for (Eigen::Index r = 0; r < Q.n; ++r) Zb(r, c) = rng.normal();
  Eigen::MatrixXd Ze(n, m);
  for (int c = 0; c < m; ++c)
    for (Eigen::Index r = 0; r < n; ++r) Ze(r, c) = rng.normal();

  // beta = L^{-T} z has covariance (L L^T)^{-1} = Q^{-1}.
  const Eigen::MatrixXd beta = qllt.matrixU().solve(Zb);
  SpatialDataset out;
  out.locations = locations;
  out.Y = Psi * beta + dfac.lower_apply(Ze);
  return out;
}

std::vector<std::string> family_param_names(Family family, std::size_t count) {
  switch (family) {
    case Family::TaperedMatern: return {"sigma2", "r", "nu", "theta"};
    case Family::GaspariCohn: return {"sigma2", "c"};
    case Family::WendlandMixture:
      return count == 4
                 ? std::vector<std::string>{"alpha1", "theta1", "alpha2",
                                            "theta2"}
                 : std::vector<std::string>{"alpha1", "theta1"};
    case Family::PureNugget: return {};
  }
  throw domain_error("unknown family");
}

RecoveryReport recovery_report(const Eigen::MatrixXd& Q_hat,
                               const Eigen::MatrixXd& Q_true,
                               const SmallScaleSpec& spec_hat,
                               const SmallScaleSpec& spec_true,
                               const SufficientStats& stats_hat,
                               const SufficientStats& stats_true) {
  if (Q_hat.rows() != Q_true.rows() || Q_hat.cols() != Q_true.cols())
    throw domain_error("recovery: Q dimensions disagree");

  RecoveryReport rep;
  rep.rel_frobenius = (Q_hat - Q_true).norm() / Q_true.norm();

  long true_nz = 0, true_z = 0, missed_nz = 0, missed_z = 0;
  for (Eigen::Index i = 0; i < Q_true.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < Q_true.cols(); ++j) {
      const bool hat_nz = std::abs(Q_hat(i, j)) > 1e-10;
      if (Q_true(i, j) != 0.0) {
        ++true_nz;
        if (!hat_nz) ++missed_nz;
      } else {
        ++true_z;
        if (hat_nz) ++missed_z;
      }
    }
  }
  rep.missed_nonzero_pct = true_nz ? 100.0 * missed_nz / double(true_nz) : 0.0;
  rep.missed_zero_pct = true_z ? 100.0 * missed_z / double(true_z) : 0.0;

  if (spec_hat.family == spec_true.family &&
      spec_hat.params.size() == spec_true.params.size()) {
    const auto names =
        family_param_names(spec_hat.family, spec_hat.params.size());
    for (std::size_t p = 0; p < names.size(); ++p)
      rep.param_abs_err[names[p]] =
          std::abs(spec_hat.params[p] - spec_true.params[p]);
  }
  if (spec_hat.tau2 > 0.0 && spec_true.tau2 > 0.0)
    rep.param_abs_err["log10_tau2"] =
        std::abs(std::log10(spec_hat.tau2) - std::log10(spec_true.tau2));

  rep.likelihood_ratio = negloglik_reduced(Q_hat, stats_hat) /
                         negloglik_reduced(Q_true, stats_true);
  return rep;
}

double median(std::vector<double> values) {
  if (values.empty()) throw domain_error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

StudyResult run_study(const StudyConfig& config) {
  config.truth.validate();
  config.anneal.validate(config.fit_family);
  if (config.trials < 1) throw domain_error("study: trials must be >= 1");
  if (config.m_list.empty()) throw domain_error("study: empty m list");
  for (int m : config.m_list)
    if (m < 2) throw domain_error("study: every m must be >= 2");
  if (config.lambda_grid.empty())
    throw domain_error("study: empty lambda grid");
  const int max_m = *std::max_element(config.m_list.begin(),
                                      config.m_list.end());

  const PointSet locs = grid_points(config.grid_nx, config.grid_ny);
  const Eigen::MatrixXd Psi = config.basis.evaluate(locs);
  const SparseSymmetric Qs = make_precision(config.graph);
  if (Qs.n != Psi.cols())
    throw domain_error("study: graph dimension must match basis size");
  const Eigen::MatrixXd Qt = Qs.to_dense();
  const CholeskyD true_fac(assemble_D(locs, config.truth),
                           "study: truth small-scale covariance");

  const std::size_t n_m = config.m_list.size();
  StudyResult res;
  res.outcomes.resize(static_cast<std::size_t>(config.trials) * n_m);

  auto run_trial = [&](int trial) {
    const std::uint64_t trial_seed =
        derive_seed(config.master_seed, static_cast<std::uint64_t>(trial));
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      TrialOutcome& out = res.outcomes[trial * n_m + mi];
      out.trial = trial;
      out.m = config.m_list[mi];
    }
    SpatialDataset full;
    try {
      full = simulate_fields(locs, Qs, Psi, config.truth, max_m, trial_seed);
    } catch (const std::exception& e) {
      for (std::size_t mi = 0; mi < n_m; ++mi)
        res.outcomes[trial * n_m + mi].error =
            std::string("simulate: ") + e.what();
      return;
    }
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      TrialOutcome& out = res.outcomes[trial * n_m + mi];
      try {
        SpatialDataset data;
        data.locations = locs;
        data.Y = full.Y.leftCols(out.m);
        AnnealConfig ann = config.anneal;
        ann.seed = derive_seed(trial_seed, 1000 + out.m);
        const DFit dfit =
            fit_d_params(data, Psi, config.fit_family, ann);

        std::optional<Eigen::MatrixXd> warm =
            dfit.alpha * Eigen::MatrixXd::Identity(Qt.rows(), Qt.cols());
        Eigen::MatrixXd best_q;
        double best_frob = std::numeric_limits<double>::infinity();
        for (double lam : config.lambda_grid) {
          const QFit qf =
              fit_Q(dfit.stats, lam, config.delta, warm, config.inner);
          warm = qf.Q;
          const double frob = (qf.Q - Qt).norm() / Qt.norm();
          if (frob < best_frob) {
            best_frob = frob;
            best_q = qf.Q;
            out.lambda_best = lam;
          }
        }
        const SufficientStats st_true = center_and_stats(data, Psi, true_fac);
        out.report = recovery_report(best_q, Qt, dfit.spec, config.truth,
                                     dfit.stats, st_true);
        out.ok = true;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };

  const int workers =
      std::clamp(config.threads, 1, config.trials);
  if (workers == 1) {
    for (int t = 0; t < config.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto drain = [&]() {
      for (int t; (t = next.fetch_add(1)) < config.trials;) run_trial(t);
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
  }

  for (int m : config.m_list) {
    std::map<std::string, std::vector<double>> cols;
    for (const TrialOutcome& out : res.outcomes) {
      if (out.m != m) continue;
      if (!out.ok) {
        ++res.failures;
        continue;
      }
      cols["rel_frobenius"].push_back(out.report.rel_frobenius);
      cols["missed_nonzero_pct"].push_back(out.report.missed_nonzero_pct);
      cols["missed_zero_pct"].push_back(out.report.missed_zero_pct);
      cols["likelihood_ratio"].push_back(out.report.likelihood_ratio);
      cols["lambda_best"].push_back(out.lambda_best);
      for (const auto& [k, v] : out.report.param_abs_err)
        cols["err_" + k].push_back(v);
    }
    auto& med = res.medians[m];
    for (auto& [k, v] : cols) med[k] = median(std::move(v));
  }
  return res;
}

std::string study_csv(const StudyResult& result, const StudyConfig& config) {
  std::set<std::string> keys;
  for (const auto& [m, med] : result.medians)
    for (const auto& [k, v] : med) keys.insert(k);

  std::map<std::string, double> truth;
  const auto names =
      family_param_names(config.truth.family, config.truth.params.size());
  for (std::size_t p = 0; p < names.size(); ++p)
    truth["err_" + names[p]] = config.truth.params[p];
  if (config.truth.tau2 > 0.0)
    truth["err_log10_tau2"] = std::log10(config.truth.tau2);
  truth["likelihood_ratio"] = 1.0;

  std::vector<std::string> order{"rel_frobenius", "missed_nonzero_pct",
                                 "missed_zero_pct"};
  for (const std::string& k : keys)
    if (k.rfind("err_", 0) == 0) order.push_back(k);
  order.push_back("likelihood_ratio");
  order.push_back("lambda_best");

  std::ostringstream os;
  os << "metric,truth";
  for (int m : config.m_list) os << ",m=" << m;
  os << "\n";
  for (const std::string& k : order) {
    if (!keys.count(k)) continue;
    os << k << ",";
    if (truth.count(k)) os << format_g17(truth.at(k));
    for (int m : config.m_list) {
      os << ",";
      const auto& med = result.medians.at(m);
      if (med.count(k)) os << format_g17(med.at(k));
    }
    os << "\n";
  }
  os << "failures,";
  for (int m : config.m_list) {
    long c = 0;
    for (const TrialOutcome& out : result.outcomes)
      if (out.m == m && !out.ok) ++c;
    os << "," << c;
  }
  os << "\n";
  return os.str();
}

}  // namespace fsbgl
