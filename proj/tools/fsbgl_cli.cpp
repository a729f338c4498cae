// fsbgl: full-scale basis graphical lasso pipeline.
// Commands: simulate | fit | select | predict | score | study.
// Exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fsbgl/cholesky.hpp"
#include "fsbgl/io.hpp"
#include "fsbgl/predictor.hpp"
#include "fsbgl/simlab.hpp"

namespace fs = std::filesystem;
using namespace fsbgl;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- options

struct BasisOpts {
  std::string kind = "cosine_tensor";
  int m_max = 10;
  int levels = 1;
  double overlap = 2.5;

  BasisSpec spec() const {
    BasisSpec b;
    b.kind = basis_kind_from_name(kind);
    b.m_max = m_max;
    b.levels = levels;
    b.overlap = overlap;
    return b;
  }
};

void add_basis_opts(CLI::App* cmd, BasisOpts& b) {
  cmd->add_option("--basis", b.kind, "cosine_tensor | wendland_lattice")
      ->capture_default_str();
  cmd->add_option("--m-max", b.m_max, "cosine max frequency per axis")
      ->capture_default_str();
  cmd->add_option("--levels", b.levels, "lattice levels")
      ->capture_default_str();
  cmd->add_option("--overlap", b.overlap, "lattice radius in node spacings")
      ->capture_default_str();
}

std::vector<double> default_params(Family f) {
  switch (f) {
    case Family::TaperedMatern: return {1.0, 0.15, 0.5, 0.3};
    case Family::GaspariCohn: return {1.0, 0.15};
    case Family::WendlandMixture: return {1.0, 0.3};
    case Family::PureNugget: return {};
  }
  return {};
}

struct SpecOpts {
  std::string family = "tapered_matern";
  std::vector<double> params;
  double tau2 = 0.01;
  std::string metric = "euclidean";

  SmallScaleSpec spec() const {
    SmallScaleSpec s;
    s.family = family_from_name(family);
    s.metric = metric_from_name(metric);
    s.params = params.empty() ? default_params(s.family) : params;
    s.tau2 = tau2;
    s.validate();
    return s;
  }
};

void add_spec_opts(CLI::App* cmd, SpecOpts& s) {
  cmd->add_option("--family", s.family,
                  "tapered_matern | gaspari_cohn | wendland_mixture | "
                  "pure_nugget")
      ->capture_default_str();
  cmd->add_option("--params", s.params,
                  "kernel parameters in layout order (default per family)");
  cmd->add_option("--tau2", s.tau2, "nugget variance")->capture_default_str();
  cmd->add_option("--metric", s.metric, "euclidean | chordal | great_circle")
      ->capture_default_str();
}

struct GraphOpts {
  std::string kind = "block_diagonal";
  int dim = 0;  // 0: match the basis column count
  int block_size = 11;
  double block_value = -0.4;
  int hub_count = 11;
  int spoke_degree = 10;
  double hub_value = -0.3;
  double edge_prob = 0.04;
  double edge_value = -0.25;
  std::uint64_t seed = 7;

  PrecisionGraphSpec spec() const {
    PrecisionGraphSpec g;
    g.kind = graph_from_name(kind);
    g.dim = dim;
    g.block_size = block_size;
    g.block_value = block_value;
    g.hub_count = hub_count;
    g.spoke_degree = spoke_degree;
    g.hub_value = hub_value;
    g.edge_prob = edge_prob;
    g.edge_value = edge_value;
    g.seed = seed;
    return g;
  }
};

void add_graph_opts(CLI::App* cmd, GraphOpts& g) {
  cmd->add_option("--graph", g.kind,
                  "block_diagonal | hub_and_spoke | random_graph")
      ->capture_default_str();
  cmd->add_option("--dim", g.dim, "precision dimension (0: basis size)")
      ->capture_default_str();
  cmd->add_option("--block-size", g.block_size)->capture_default_str();
  cmd->add_option("--block-value", g.block_value)->capture_default_str();
  cmd->add_option("--hub-count", g.hub_count)->capture_default_str();
  cmd->add_option("--spoke-degree", g.spoke_degree)->capture_default_str();
  cmd->add_option("--hub-value", g.hub_value)->capture_default_str();
  cmd->add_option("--edge-prob", g.edge_prob)->capture_default_str();
  cmd->add_option("--edge-value", g.edge_value)->capture_default_str();
  cmd->add_option("--graph-seed", g.seed)->capture_default_str();
}

struct AnnealOpts {
  AnnealConfig base;  // defaults; boxes filled per family at use
  int wm_components = 1;

  AnnealConfig config(Family family) const {
    AnnealConfig c = default_anneal(family, wm_components);
    c.t0 = base.t0;
    c.cooling = base.cooling;
    c.max_steps = base.max_steps;
    c.window = base.window;
    c.rel_tol = base.rel_tol;
    c.init_scan = base.init_scan;
    c.polish_sweeps = base.polish_sweeps;
    c.nm_evals = base.nm_evals;
    c.seed = base.seed;
    return c;
  }
};

void add_anneal_opts(CLI::App* cmd, AnnealOpts& a) {
  cmd->add_option("--anneal-steps", a.base.max_steps)->capture_default_str();
  cmd->add_option("--anneal-window", a.base.window)->capture_default_str();
  cmd->add_option("--anneal-cooling", a.base.cooling)->capture_default_str();
  cmd->add_option("--anneal-rel-tol", a.base.rel_tol)->capture_default_str();
  cmd->add_option("--anneal-scan", a.base.init_scan)->capture_default_str();
  cmd->add_option("--anneal-polish", a.base.polish_sweeps)
      ->capture_default_str();
  cmd->add_option("--anneal-nm", a.base.nm_evals,
                  "continuous simplex-polish evaluations (0 disables)")
      ->capture_default_str();
  cmd->add_option("--anneal-t0", a.base.t0, "<=0 derives from initial scan")
      ->capture_default_str();
  cmd->add_option("--anneal-seed", a.base.seed)->capture_default_str();
  cmd->add_option("--wm-components", a.wm_components,
                  "wendland mixture components (1 or 2)")
      ->capture_default_str();
}

// ---------------------------------------------------------------- helpers

SpatialDataset read_dataset(const fs::path& dir) {
  SpatialDataset data;
  data.locations = read_points_csv(dir / "locations.csv");
  data.Y = read_matrix_csv(dir / "replicates.csv");
  if (data.Y.rows() != data.locations.rows())
    throw io_error("replicates rows do not match locations in " +
                   dir.string());
  data.check();
  return data;
}

void write_manifest(const fs::path& out, CLI::App& app,
                    const std::string& command,
                    std::chrono::steady_clock::time_point started) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    started)
          .count();
  std::ostringstream os;
  os << app.config_to_str(true, true);
  os << "\n[manifest]\n";
  os << "command = " << command << "\n";
  os << "version = " << kVersion << "\n";
  os << "wall_seconds = " << format_g17(wall) << "\n";
  write_text_atomic(out / "manifest.ini", os.str());
}

void write_dfit(const fs::path& file, const DFit& dfit) {
  KeyValueFile kv;
  kv.set("family", family_name(dfit.spec.family));
  kv.set("metric", metric_name(dfit.spec.metric));
  const auto names =
      family_param_names(dfit.spec.family, dfit.spec.params.size());
  for (std::size_t p = 0; p < names.size(); ++p)
    kv.set(names[p], dfit.spec.params[p]);
  kv.set("tau2", dfit.spec.tau2);
  kv.set("alpha", dfit.alpha);
  kv.set("objective", dfit.objective);
  kv.set("evaluations", static_cast<long long>(dfit.evaluations));
  kv.set("failures", static_cast<long long>(dfit.failures));
  write_text_atomic(file, kv.serialize());
}

void write_lambda_path(const fs::path& out, const SelectionResult& sel) {
  Eigen::MatrixXd path(static_cast<Eigen::Index>(sel.fits.size()), 7);
  for (std::size_t i = 0; i < sel.fits.size(); ++i) {
    const LambdaFit& lf = sel.fits[i];
    path(i, 0) = lf.lambda;
    path(i, 1) = lf.ic.caic;
    path(i, 2) = lf.ic.df_e;
    path(i, 3) = lf.ic.hat_trace;
    path(i, 4) = lf.fit.diag.outer_iterations;
    path(i, 5) = lf.fit.diag.inner_iterations_total;
    path(i, 6) = lf.fit.diag.converged ? 1.0 : 0.0;
    std::ostringstream name;
    name << "Q_path_" << i << ".csv";
    write_triplets_csv(out / name.str(),
                       SparseSymmetric::from_dense(lf.fit.Q, 0.0));
  }
  write_matrix_csv(out / "path.csv", path,
                   {"lambda", "caic", "df_e", "hat_trace", "outer_iterations",
                    "inner_iterations", "converged"});
}

void write_dc_diagnostics(const fs::path& file, const FitDiagnostics& diag) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(diag.objective_trace.size()), 3);
  for (std::size_t i = 0; i < diag.objective_trace.size(); ++i) {
    M(i, 0) = static_cast<double>(i);
    M(i, 1) = diag.objective_trace[i];
    M(i, 2) = i == 0 ? 0.0 : diag.rel_change[i - 1];
  }
  write_matrix_csv(file, M, {"iteration", "objective", "relative_change"});
}

void write_selected_model(const fs::path& out, const SelectionResult& sel,
                          const SmallScaleSpec& spec, const BasisSpec& basis,
                          double alpha) {
  const LambdaFit& pick = sel.fits[sel.index];
  FittedModel model;
  model.Q = pick.fit.Q;
  model.spec = spec;
  model.basis = basis;
  model.lambda = sel.lambda_star;
  model.alpha = alpha;
  model.diag = pick.fit.diag;
  write_model_files(out, model);
  write_dc_diagnostics(out / "diagnostics.csv", pick.fit.diag);
  write_lambda_path(out, sel);
}

// ---------------------------------------------------------------- commands

int run(CLI::App& app, int argc, char** argv) {
  app.set_config("--config", "", "config file (per-command sections)");
  app.allow_config_extras(true);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker thread cap")
      ->capture_default_str();

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "draw synthetic replicates");
  struct {
    std::string out;
    GraphOpts graph;
    SpecOpts truth;
    BasisOpts basis;
    int nx = 50, ny = 50, m = 100;
    std::uint64_t seed = 1;
  } so;
  sim->add_option("--out", so.out, "output directory")->required();
  add_graph_opts(sim, so.graph);
  add_spec_opts(sim, so.truth);
  add_basis_opts(sim, so.basis);
  sim->add_option("--nx", so.nx)->capture_default_str();
  sim->add_option("--ny", so.ny)->capture_default_str();
  sim->add_option("--m", so.m, "replicates")->capture_default_str();
  sim->add_option("--seed", so.seed)->capture_default_str();

  // ---- fit
  auto* fit = app.add_subcommand("fit", "two-stage estimation");
  struct {
    std::string data, out;
    SpecOpts family;  // family/metric used; params ignored (annealed)
    BasisOpts basis;
    AnnealOpts anneal;
    std::vector<double> lambda_grid;
    double delta = 0.02;
    double glasso_tol = 1e-6;
    double flat_tol = 1e-4;
    bool bgl = false;
  } fo;
  fit->add_option("--data", fo.data, "dataset directory")->required();
  fit->add_option("--out", fo.out, "output directory")->required();
  add_spec_opts(fit, fo.family);
  add_basis_opts(fit, fo.basis);
  add_anneal_opts(fit, fo.anneal);
  fit->add_option("--lambda-grid", fo.lambda_grid,
                  "descending; default decade grid");
  fit->add_option("--delta", fo.delta, "DC stopping threshold")
      ->capture_default_str();
  fit->add_option("--glasso-tol", fo.glasso_tol)->capture_default_str();
  fit->add_option("--flat-tol", fo.flat_tol,
                  "cAIC per-decade flattening threshold")
      ->capture_default_str();
  fit->add_flag("--bgl", fo.bgl,
                "BGL mode: pure-nugget small scale (D = tau^2 I)");

  // ---- select
  auto* sel = app.add_subcommand("select", "lambda path on a fixed spec");
  struct {
    std::string data, out, spec_file;
    BasisOpts basis;
    double alpha = 1.0;
    std::vector<double> lambda_grid;
    double delta = 0.02;
    double glasso_tol = 1e-6;
    double flat_tol = 1e-4;
  } se;
  sel->add_option("--data", se.data)->required();
  sel->add_option("--out", se.out)->required();
  sel->add_option("--spec", se.spec_file, "small-scale spec file")->required();
  add_basis_opts(sel, se.basis);
  sel->add_option("--alpha", se.alpha, "initial Q = alpha I")
      ->capture_default_str();
  sel->add_option("--lambda-grid", se.lambda_grid);
  sel->add_option("--delta", se.delta)->capture_default_str();
  sel->add_option("--glasso-tol", se.glasso_tol)->capture_default_str();
  sel->add_option("--flat-tol", se.flat_tol)->capture_default_str();

  // ---- predict
  auto* pre = app.add_subcommand("predict", "conditional prediction");
  struct {
    std::string model, data, targets, truth, out;
  } po;
  pre->add_option("--model", po.model, "fitted model directory")->required();
  pre->add_option("--data", po.data, "observed dataset directory")->required();
  pre->add_option("--targets", po.targets, "target points csv")->required();
  pre->add_option("--truth", po.truth, "held-out truth matrix csv");
  pre->add_option("--out", po.out)->required();

  // ---- score
  auto* sco = app.add_subcommand("score", "summarize a predictions file");
  struct {
    std::string predictions, out;
  } sc;
  sco->add_option("--predictions", sc.predictions, "predictions csv")
      ->required();
  sco->add_option("--out", sc.out, "output directory (score.ini)");

  // ---- study
  auto* stu = app.add_subcommand("study", "recovery study with medians");
  struct {
    std::string out;
    GraphOpts graph;
    SpecOpts truth;
    SpecOpts fitfam;
    BasisOpts basis;
    AnnealOpts anneal;
    int nx = 50, ny = 50, trials = 10;
    std::vector<int> m_list{10, 100};
    std::uint64_t master_seed = 20260815;
    std::vector<double> lambda_grid;
    double delta = 0.02;
  } st;
  stu->add_option("--out", st.out)->required();
  add_graph_opts(stu, st.graph);
  add_spec_opts(stu, st.truth);
  stu->add_option("--fit-family", st.fitfam.family,
                  "family fitted to the simulated fields")
      ->capture_default_str();
  add_basis_opts(stu, st.basis);
  add_anneal_opts(stu, st.anneal);
  stu->add_option("--nx", st.nx)->capture_default_str();
  stu->add_option("--ny", st.ny)->capture_default_str();
  stu->add_option("--trials", st.trials)->capture_default_str();
  stu->add_option("--m-list", st.m_list, "replicate counts")
      ->capture_default_str();
  stu->add_option("--master-seed", st.master_seed)->capture_default_str();
  stu->add_option("--lambda-grid", st.lambda_grid);
  stu->add_option("--delta", st.delta)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // normalize parse failures to the usage code
  }
  init_linear_algebra_threads();
  const auto started = std::chrono::steady_clock::now();

  if (sim->parsed()) {
    const fs::path out = so.out;
    const SmallScaleSpec truth = so.truth.spec();
    const BasisSpec basis = so.basis.spec();
    const PointSet locs = grid_points(so.nx, so.ny);
    const Eigen::MatrixXd Psi = basis.evaluate(locs);
    GraphOpts g = so.graph;
    if (g.dim == 0) g.dim = static_cast<int>(Psi.cols());
    const SparseSymmetric Q = make_precision(g.spec());
    const SpatialDataset data =
        simulate_fields(locs, Q, Psi, truth, so.m, so.seed);
    write_points_csv(out / "locations.csv", data.locations);
    write_matrix_csv(out / "replicates.csv", data.Y);
    write_triplets_csv(out / "Q_true.csv", Q);
    write_spec_file(out / "spec_true.ini", truth);
    write_manifest(out, app, "simulate", started);
    std::cout << "simulate: " << data.n_sites() << " sites x "
              << data.n_replicates() << " replicates -> " << out << "\n";
    return 0;
  }

  if (fit->parsed()) {
    const fs::path out = fo.out;
    const SpatialDataset data = read_dataset(fo.data);
    const BasisSpec basis = fo.basis.spec();
    const Eigen::MatrixXd Psi = basis.evaluate(data.locations);
    if (fo.bgl) fo.family.family = "pure_nugget";
    const Family family = family_from_name(fo.family.family);
    const Metric metric = metric_from_name(fo.family.metric);

    DFit dfit;
    try {
      dfit = fit_d_params(data, Psi, family,
                          fo.anneal.config(family), metric);
    } catch (const std::exception& e) {
      throw numerical_error(std::string("stage small-scale: ") + e.what());
    }
    write_dfit(out / "dfit.ini", dfit);

    GlassoOptions inner;
    inner.tol = fo.glasso_tol;
    const std::vector<double> grid =
        fo.lambda_grid.empty() ? decade_lambda_grid() : fo.lambda_grid;
    SelectionResult selres;
    try {
      const Eigen::MatrixXd Q0 =
          dfit.alpha *
          Eigen::MatrixXd::Identity(Psi.cols(), Psi.cols());
      selres = select_lambda(dfit.stats, dfit.spec, grid, fo.delta, Q0,
                             inner, fo.flat_tol);
    } catch (const std::exception& e) {
      throw numerical_error(std::string("stage lambda-path: ") + e.what());
    }
    write_selected_model(out, selres, dfit.spec, basis, dfit.alpha);
    write_manifest(out, app, "fit", started);
    std::cout << "fit: lambda* = " << selres.lambda_star << ", caic = "
              << selres.fits[selres.index].ic.caic << " -> " << out << "\n";
    return 0;
  }

  if (sel->parsed()) {
    const fs::path out = se.out;
    const SpatialDataset data = read_dataset(se.data);
    const BasisSpec basis = se.basis.spec();
    const Eigen::MatrixXd Psi = basis.evaluate(data.locations);
    const SmallScaleSpec spec = read_spec_file(se.spec_file);
    GlassoOptions inner;
    inner.tol = se.glasso_tol;
    const std::vector<double> grid =
        se.lambda_grid.empty() ? decade_lambda_grid() : se.lambda_grid;
    const Eigen::MatrixXd Q0 =
        se.alpha * Eigen::MatrixXd::Identity(Psi.cols(), Psi.cols());
    const SelectionResult selres = select_lambda(
        data, Psi, spec, grid, se.delta, Q0, inner, se.flat_tol);
    write_selected_model(out, selres, spec, basis, se.alpha);
    write_manifest(out, app, "select", started);
    std::cout << "select: lambda* = " << selres.lambda_star << " -> " << out
              << "\n";
    return 0;
  }

  if (pre->parsed()) {
    const fs::path out = po.out;
    const FittedModel model = read_model_files(po.model);
    const SpatialDataset data = read_dataset(po.data);
    const PointSet targets = read_points_csv(po.targets);
    const Predictions preds = predict(model, data, targets);

    const bool have_truth = !po.truth.empty();
    Eigen::MatrixXd truth;
    if (have_truth) {
      truth = read_matrix_csv(po.truth);
      if (truth.rows() != preds.mean.rows() ||
          truth.cols() != preds.mean.cols())
        throw io_error("truth matrix shape does not match predictions");
    }
    const Eigen::Index m = preds.mean.cols();
    Eigen::MatrixXd flat(targets.rows() * m, have_truth ? 7 : 5);
    std::vector<std::string> header{"x", "y", "replicate", "mean",
                                    "variance"};
    if (have_truth) {
      header.push_back("truth");
      header.push_back("crps");
    }
    Eigen::Index row = 0;
    for (Eigen::Index t = 0; t < targets.rows(); ++t) {
      for (Eigen::Index r = 0; r < m; ++r, ++row) {
        flat(row, 0) = targets(t, 0);
        flat(row, 1) = targets(t, 1);
        flat(row, 2) = static_cast<double>(r);
        flat(row, 3) = preds.mean(t, r);
        flat(row, 4) = preds.variance(t);
        if (have_truth) {
          flat(row, 5) = truth(t, r);
          flat(row, 6) = crps_gaussian(preds.mean(t, r),
                                       std::sqrt(preds.variance(t)),
                                       truth(t, r));
        }
      }
    }
    write_matrix_csv(out / "predictions.csv", flat, header);
    write_manifest(out, app, "predict", started);
    std::cout << "predict: " << targets.rows() << " targets x " << m
              << " replicates -> " << out << "\n";
    return 0;
  }

  if (sco->parsed()) {
    std::vector<std::string> header;
    const Eigen::MatrixXd P = read_matrix_csv(sc.predictions, &header);
    int c_mean = -1, c_var = -1, c_truth = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "mean") c_mean = static_cast<int>(c);
      if (header[c] == "variance") c_var = static_cast<int>(c);
      if (header[c] == "truth") c_truth = static_cast<int>(c);
    }
    if (c_mean < 0 || c_var < 0)
      throw io_error("predictions csv lacks mean/variance columns");
    if (c_truth < 0)
      throw domain_error("predictions csv has no truth column to score");
    std::vector<PredictiveDistribution> dists(P.rows());
    std::vector<double> truths(P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      dists[i].mean = P(i, c_mean);
      dists[i].variance = P(i, c_var);
      truths[i] = P(i, c_truth);
    }
    const ScoreSummary s = score(dists, truths);
    KeyValueFile kv;
    kv.set("count", static_cast<long long>(P.rows()));
    kv.set("mean_crps", s.mean_crps);
    kv.set("median_crps", s.median_crps);
    kv.set("rmse", s.rmse);
    std::cout << kv.serialize();
    if (!sc.out.empty()) {
      write_text_atomic(fs::path(sc.out) / "score.ini", kv.serialize());
      write_manifest(fs::path(sc.out), app, "score", started);
    }
    return 0;
  }

  if (stu->parsed()) {
    const fs::path out = st.out;
    StudyConfig cfg;
    cfg.graph = st.graph.spec();
    cfg.truth = st.truth.spec();
    cfg.fit_family = family_from_name(st.fitfam.family);
    cfg.anneal = st.anneal.config(cfg.fit_family);
    cfg.basis = st.basis.spec();
    cfg.grid_nx = st.nx;
    cfg.grid_ny = st.ny;
    cfg.m_list = st.m_list;
    cfg.trials = st.trials;
    cfg.master_seed = st.master_seed;
    if (!st.lambda_grid.empty()) cfg.lambda_grid = st.lambda_grid;
    cfg.delta = st.delta;
    cfg.threads = threads;
    if (cfg.graph.dim == 0) cfg.graph.dim = cfg.basis.column_count();

    const StudyResult res = run_study(cfg);
    write_text_atomic(out / "study.csv", study_csv(res, cfg));

    std::ostringstream os;
    os << "trial,m,ok,lambda_best,rel_frobenius,missed_nonzero_pct,"
          "missed_zero_pct,likelihood_ratio,error\n";
    for (const TrialOutcome& o : res.outcomes) {
      os << o.trial << "," << o.m << "," << (o.ok ? 1 : 0) << ","
         << format_g17(o.lambda_best) << ","
         << format_g17(o.report.rel_frobenius) << ","
         << format_g17(o.report.missed_nonzero_pct) << ","
         << format_g17(o.report.missed_zero_pct) << ","
         << format_g17(o.report.likelihood_ratio) << "," << o.error << "\n";
    }
    write_text_atomic(out / "outcomes.csv", os.str());
    write_manifest(out, app, "study", started);
    std::cout << study_csv(res, cfg);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"full-scale basis graphical lasso pipeline"};
  try {
    return run(app, argc, argv);
  } catch (const domain_error& e) {
    std::cerr << "error (usage): " << e.what() << "\n";
    return 1;
  } catch (const io_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return 3;
  } catch (const numerical_error& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
