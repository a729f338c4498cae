#include "fsbgl/dcfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

namespace fsbgl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

double box_value(const ParamBox& b, int idx) {
  double t = b.lo;
  if (b.steps > 1) t = b.lo + (b.hi - b.lo) * idx / double(b.steps - 1);
  return b.log10 ? std::pow(10.0, t) : t;
}

int family_param_count(Family f, std::size_t boxes) {
  switch (f) {
    case Family::TaperedMatern: return 4;
    case Family::GaspariCohn: return 2;
    case Family::WendlandMixture:
      return boxes == 5 ? 4 : 2;  // k = 2 or k = 1
    case Family::PureNugget: return 0;
  }
  throw domain_error("unknown family");
}

// ---- alpha profile -------------------------------------------------------
// With Q = alpha I and Gram = V diag(g) V', the reduced likelihood is
//   sum_k [ log(alpha+g_k) - b_k/(alpha+g_k) ] - K log(alpha)
//   + logdetD + traceSDinv,          b_k = ||(V' CrossData)_k.||^2 / m,
// a smooth scalar function minimized by grid scan plus golden section.
struct AlphaProfile {
  double alpha = 0.0;
  double objective = kInf;
};

AlphaProfile profile_alpha(const SufficientStats& st) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.Gram);
  if (eig.info() != Eigen::Success)
    throw numerical_error("alpha profile: eigendecomposition failed");
  const Eigen::VectorXd g = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd T = eig.eigenvectors().transpose() * st.CrossData;
  const Eigen::VectorXd b = T.rowwise().squaredNorm() / double(st.m);
  const double K = double(g.size());
  const double base = st.logdetD + st.traceSDinv;

  auto obj = [&](double log10_alpha) {
    const double a = std::pow(10.0, log10_alpha);
    double s = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const double ag = a + g(k);
      s += std::log(ag) - b(k) / ag;
    }
    return s - K * std::log(a) + base;
  };

  double best_t = 0.0, best_f = kInf;
  for (int i = 0; i <= 48; ++i) {
    const double t = -6.0 + 12.0 * i / 48.0;
    const double f = obj(t);
    if (f < best_f) {
      best_f = f;
      best_t = t;
    }
  }
  double lo = best_t - 0.25, hi = best_t + 0.25;
  const double gr = 0.6180339887498949;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = obj(x1), f2 = obj(x2);
  for (int it = 0; it < 70; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = obj(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = obj(x2);
    }
  }
  AlphaProfile out;
  out.alpha = std::pow(10.0, 0.5 * (lo + hi));
  out.objective = obj(0.5 * (lo + hi));
  if (!std::isfinite(out.objective))
    throw numerical_error("alpha profile: non-finite objective");
  return out;
}

// ---- proposal evaluation cache -------------------------------------------
// Pairs within the largest possible support are enumerated once; kernel
// evaluations per proposal touch only the unique (quantized) distances.
struct PairCache {
  int n = 0;
  std::vector<NeighborPair> pairs;  // sorted by (i, j)
  std::vector<int> uniq_of_pair;
  std::vector<double> uniq_d;
  std::vector<std::size_t> row_ptr;  // n + 1
};

PairCache build_pair_cache(const PointSet& pts, double radius, Metric metric) {
  PairCache pc;
  pc.n = static_cast<int>(pts.rows());
  pc.pairs = neighbor_pairs(pts, radius, metric);
  std::vector<std::pair<std::int64_t, std::size_t>> keys(pc.pairs.size());
  for (std::size_t p = 0; p < pc.pairs.size(); ++p)
    keys[p] = {std::llround(pc.pairs[p].d * 1e9), p};
  std::sort(keys.begin(), keys.end());
  pc.uniq_of_pair.resize(pc.pairs.size());
  for (std::size_t p = 0; p < keys.size(); ++p) {
    if (p == 0 || keys[p].first != keys[p - 1].first)
      pc.uniq_d.push_back(pc.pairs[keys[p].second].d);
    pc.uniq_of_pair[keys[p].second] = static_cast<int>(pc.uniq_d.size()) - 1;
  }
  pc.row_ptr.assign(static_cast<std::size_t>(pc.n) + 1, 0);
  for (const auto& pr : pc.pairs) ++pc.row_ptr[static_cast<std::size_t>(pr.i) + 1];
  for (int i = 0; i < pc.n; ++i) pc.row_ptr[i + 1] += pc.row_ptr[i];
  return pc;
}

SmallScaleSpec spec_from_state(Family family, const AnnealConfig& cfg,
                               const std::vector<int>& idx, Metric metric) {
  SmallScaleSpec spec;
  spec.family = family;
  spec.metric = metric;
  const std::size_t p = cfg.boxes.size() - 1;
  spec.params.resize(p);
  for (std::size_t d = 0; d < p; ++d)
    spec.params[d] = box_value(cfg.boxes[d], idx[d]);
  spec.tau2 = box_value(cfg.boxes[p], idx[p]);
  return spec;
}

struct EvalOutcome {
  bool feasible = false;
  double objective = kInf;
  double alpha = 0.0;
};

// ---- moment-matching initializer -----------------------------------------
// The annealed likelihood surface has long curved ridges (range/smoothness/
// nugget trade-offs) with more than one basin; a lattice walk plus local
// polish can converge in the wrong one. The binned empirical covariogram
// gives a cheap, deterministic seed: for each shape candidate the amplitude
// parameters and a linear-in-distance smooth-component offset are solved by
// weighted least squares, the nugget comes from the variance jump at zero,
// and the best candidate seeds both the anneal and the simplex polish.
struct MomentCurve {
  std::vector<double> d, c, w;  // bin centroid, empirical covariance, weight
  double variance0 = 0.0;       // mean per-site sample variance
};

std::optional<MomentCurve> empirical_covariogram(const PairCache& pc,
                                                 const Eigen::MatrixXd& Yc,
                                                 double radius, int bins) {
  if (pc.pairs.empty() || radius <= 0.0) return std::nullopt;
  const auto m = Yc.cols();
  if (m < 2) return std::nullopt;
  const double denom = double(m - 1);

  MomentCurve mc;
  mc.variance0 = Yc.rowwise().squaredNorm().mean() / denom;
  std::vector<double> sum_c(bins, 0.0), sum_d(bins, 0.0), cnt(bins, 0.0);
  for (const auto& pr : pc.pairs) {
    int b = static_cast<int>(pr.d / radius * bins);
    b = std::clamp(b, 0, bins - 1);
    sum_c[b] += Yc.row(pr.i).dot(Yc.row(pr.j)) / denom;
    sum_d[b] += pr.d;
    cnt[b] += 1.0;
  }
  for (int b = 0; b < bins; ++b)
    if (cnt[b] > 0.0) {
      mc.d.push_back(sum_d[b] / cnt[b]);
      mc.c.push_back(sum_c[b] / cnt[b]);
      mc.w.push_back(cnt[b]);
    }
  if (mc.d.size() < 8) return std::nullopt;
  return mc;
}

// Linear components of each family: curves whose amplitudes enter the
// covariance linearly for a fixed shape. Returns per-bin curve values,
// one inner vector per amplitude parameter.
std::vector<std::vector<double>> unit_curves(Family family,
                                             const std::vector<double>& shape,
                                             const std::vector<double>& d) {
  const std::size_t nb = d.size();
  std::vector<std::vector<double>> out;
  switch (family) {
    case Family::TaperedMatern: {  // shape = (r, nu, theta)
      out.emplace_back(nb);
      for (std::size_t b = 0; b < nb; ++b)
        out[0][b] = tapered_matern(d[b], 1.0, shape[0], shape[1], shape[2]);
      break;
    }
    case Family::GaspariCohn: {  // shape = (c)
      out.emplace_back(nb);
      for (std::size_t b = 0; b < nb; ++b)
        out[0][b] = gaspari_cohn(d[b], shape[0]);
      break;
    }
    case Family::WendlandMixture: {  // shape = (theta_1 [, theta_2])
      for (double th : shape) {
        out.emplace_back(nb);
        for (std::size_t b = 0; b < nb; ++b)
          out.back()[b] = wendland(d[b], th);
      }
      break;
    }
    case Family::PureNugget:
      break;
  }
  return out;
}

struct MomentFit {
  double sse = kInf;
  std::vector<double> params;  // family layout
  double tau2 = 0.0;
};

// For one shape: solve amplitudes + offset (c0 + c1 d) by weighted least
// squares, read the nugget off the variance jump, score by weighted SSE.
std::optional<MomentFit> moment_score(Family family,
                                      const std::vector<double>& shape,
                                      const MomentCurve& mc,
                                      const AnnealConfig& cfg) {
  const auto curves = unit_curves(family, shape, mc.d);
  const std::size_t L = curves.size(), nb = mc.d.size();
  const std::size_t cols = L + 2;  // amplitudes, c0, c1
  Eigen::MatrixXd A(nb, cols);
  Eigen::VectorXd y(nb), w(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t l = 0; l < L; ++l) A(b, l) = curves[l][b];
    A(b, L) = 1.0;
    A(b, L + 1) = mc.d[b];
    y(b) = mc.c[b];
    w(b) = std::sqrt(mc.w[b]);
  }
  const Eigen::MatrixXd Aw = w.asDiagonal() * A;
  const Eigen::VectorXd yw = w.asDiagonal() * y;
  const Eigen::VectorXd beta =
      (Aw.transpose() * Aw)
          .ldlt()
          .solve(Aw.transpose() * yw);
  if (!beta.allFinite()) return std::nullopt;
  double amp_total = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    if (beta(l) <= 0.0) return std::nullopt;  // wrong shape for the data
    amp_total += beta(l);
  }

  MomentFit fit;
  fit.sse = (Aw * beta - yw).squaredNorm();

  // Family parameter vector = amplitudes interleaved with shape dims.
  switch (family) {
    case Family::TaperedMatern:
      fit.params = {beta(0), shape[0], shape[1], shape[2]};
      break;
    case Family::GaspariCohn:
      fit.params = {beta(0), shape[0]};
      break;
    case Family::WendlandMixture:
      for (std::size_t l = 0; l < L; ++l) {
        fit.params.push_back(beta(l));
        fit.params.push_back(shape[l]);
      }
      break;
    case Family::PureNugget:
      break;
  }
  const double c0 = beta(L);
  fit.tau2 = mc.variance0 - amp_total - c0;
  // Clamp into the search boxes so the seed is a valid proposal.
  const std::size_t p = cfg.boxes.size() - 1;
  for (std::size_t d = 0; d < p; ++d) {
    const ParamBox& b = cfg.boxes[d];
    const double lo = b.log10 ? std::pow(10.0, b.lo) : b.lo;
    const double hi = b.log10 ? std::pow(10.0, b.hi) : b.hi;
    fit.params[d] = std::clamp(fit.params[d], lo, hi);
  }
  {
    const ParamBox& b = cfg.boxes[p];
    const double lo = b.log10 ? std::pow(10.0, b.lo) : b.lo;
    const double hi = b.log10 ? std::pow(10.0, b.hi) : b.hi;
    fit.tau2 = std::clamp(fit.tau2, lo, hi);
  }
  return fit;
}

// Covariogram-matched candidate seeds. The binned curve is nearly flat along
// shape trade-off ridges (e.g. Matern smoothness vs range), so instead of one
// winner this returns the per-group best over the dominant shape dimension,
// ordered by fit quality; the likelihood adjudicates among them cheaply.
std::vector<SmallScaleSpec> moment_init(Family family,
                                        const AnnealConfig& cfg,
                                        const PairCache& pc,
                                        const SpatialDataset& data,
                                        const Eigen::MatrixXd& Psi,
                                        double radius, Metric metric) {
  if (family == Family::PureNugget) return {};
  // Center per site, then project onto the orthogonal complement of the basis:
  // the basis field carries smooth large-scale covariance that would swamp the
  // short-range curve; the projection removes it exactly and leaves (up to a
  // smooth remainder the offset absorbs) the small-scale-plus-nugget part.
  Eigen::MatrixXd Yc = data.Y.colwise() - data.Y.rowwise().mean().eval();
  if (Psi.cols() > 0 && Psi.cols() < Psi.rows()) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Psi);
    const Eigen::MatrixXd Q1 =
        qr.householderQ() *
        Eigen::MatrixXd::Identity(Psi.rows(), Psi.cols());
    Yc -= Q1 * (Q1.transpose() * Yc);
  }
  const auto mc = empirical_covariogram(pc, Yc, radius, 48);
  if (!mc) return {};

  // Shape dimensions = non-amplitude boxes (amplitudes are solved linearly).
  // Scan shapes on the boxes' own lattices.
  std::vector<std::size_t> shape_dims;
  switch (family) {
    case Family::TaperedMatern: shape_dims = {1, 2, 3}; break;
    case Family::GaspariCohn: shape_dims = {1}; break;
    case Family::WendlandMixture:
      shape_dims = cfg.boxes.size() == 5 ? std::vector<std::size_t>{1, 3}
                                         : std::vector<std::size_t>{1};
      break;
    case Family::PureNugget: return {};
  }
  // Group by the finest shape lattice (the dimension most likely to carry a
  // ridge) and keep the best fit per group value.
  std::size_t gdim = 0;
  for (std::size_t s = 1; s < shape_dims.size(); ++s)
    if (cfg.boxes[shape_dims[s]].steps > cfg.boxes[shape_dims[gdim]].steps)
      gdim = s;
  std::map<int, MomentFit> groups;
  std::vector<int> idx(shape_dims.size(), 0);
  for (;;) {
    std::vector<double> shape(shape_dims.size());
    for (std::size_t s = 0; s < shape_dims.size(); ++s)
      shape[s] = box_value(cfg.boxes[shape_dims[s]], idx[s]);
    if (const auto fit = moment_score(family, shape, *mc, cfg)) {
      MomentFit& g = groups[idx[gdim]];
      if (fit->sse < g.sse) g = *fit;
    }
    std::size_t s = 0;
    for (; s < shape_dims.size(); ++s) {
      if (++idx[s] < cfg.boxes[shape_dims[s]].steps) break;
      idx[s] = 0;
    }
    if (s == shape_dims.size()) break;
  }

  std::vector<MomentFit> ranked;
  for (auto& [key, fit] : groups)
    if (std::isfinite(fit.sse)) ranked.push_back(std::move(fit));
  std::sort(ranked.begin(), ranked.end(),
            [](const MomentFit& a, const MomentFit& b) { return a.sse < b.sse; });

  constexpr std::size_t kMaxCandidates = 6;
  std::vector<SmallScaleSpec> out;
  for (const MomentFit& fit : ranked) {
    if (out.size() >= kMaxCandidates) break;
    SmallScaleSpec spec;
    spec.family = family;
    spec.metric = metric;
    spec.params = fit.params;
    spec.tau2 = fit.tau2;
    try {
      spec.validate();
    } catch (const domain_error&) {
      continue;
    }
    out.push_back(std::move(spec));
  }
  return out;
}

// Builds D from cached pairs (dense scatter when the factorization will run
// dense anyway), factorizes, forms sufficient statistics, profiles alpha.
EvalOutcome evaluate_proposal(const SmallScaleSpec& spec, const PairCache& pc,
                              const SpatialDataset& data,
                              const Eigen::MatrixXd& Psi) {
  EvalOutcome out;
  const int n = pc.n;
  const double support = spec.support();
  const double diag = spec.variance0() + spec.tau2;
  std::vector<double> kv(pc.uniq_d.size());
  for (std::size_t u = 0; u < kv.size(); ++u)
    kv[u] = pc.uniq_d[u] < support ? spec.evaluate(pc.uniq_d[u]) : 0.0;

  std::size_t nnz_off = 0;
  for (std::size_t p = 0; p < pc.pairs.size(); ++p)
    if (std::abs(kv[pc.uniq_of_pair[p]]) >= 1e-14) ++nnz_off;
  const double density =
      (double(n) + 2.0 * double(nnz_off)) / (double(n) * double(n));

  try {
    std::optional<CholeskyD> fac;
    if (n <= 4000 && density > 0.01) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t p = 0; p < pc.pairs.size(); ++p) {
        const double v = kv[pc.uniq_of_pair[p]];
        if (std::abs(v) >= 1e-14) {
          M(pc.pairs[p].i, pc.pairs[p].j) = v;
          M(pc.pairs[p].j, pc.pairs[p].i) = v;
        }
      }
      M.diagonal().setConstant(diag);
      fac.emplace(std::move(M), spec.describe());
    } else {
      SparseSymmetric D;
      D.n = n;
      D.entries.reserve(nnz_off + static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        D.entries.push_back({i, i, diag});
        for (std::size_t p = pc.row_ptr[i]; p < pc.row_ptr[i + 1]; ++p) {
          const double v = kv[pc.uniq_of_pair[p]];
          if (std::abs(v) >= 1e-14)
            D.entries.push_back({pc.pairs[p].i, pc.pairs[p].j, v});
        }
      }
      fac.emplace(D, spec.describe());
    }
    const SufficientStats st = center_and_stats(data, Psi, *fac);
    const AlphaProfile ap = profile_alpha(st);
    out.feasible = true;
    out.objective = ap.objective;
    out.alpha = ap.alpha;
  } catch (const numerical_error&) {
    out.feasible = false;
  }
  return out;
}

}  // namespace

void AnnealConfig::validate(Family family) const {
  if (boxes.empty()) throw domain_error("anneal: no parameter boxes");
  const int p = family_param_count(family, boxes.size());
  if (static_cast<int>(boxes.size()) != p + 1)
    throw domain_error("anneal: box count does not match family (params + tau2)");
  for (const auto& b : boxes) {
    if (!(b.lo <= b.hi) || b.steps < 1)
      throw domain_error("anneal: malformed box " + b.name);
  }
  if (!(cooling > 0.0 && cooling < 1.0))
    throw domain_error("anneal: cooling factor must be in (0,1)");
  if (!(rel_tol > 0.0)) throw domain_error("anneal: threshold must be positive");
  if (window < 1 || max_steps < 1)
    throw domain_error("anneal: window and max_steps must be positive");
  if (nm_evals < 0) throw domain_error("anneal: nm_evals must be >= 0");
}

AnnealConfig default_anneal(Family family, int wm_components) {
  AnnealConfig cfg;
  switch (family) {
    case Family::TaperedMatern:
      cfg.boxes = {{"sigma2", 0.2, 3.0, 15, false},
                   {"r", -1.7, -0.3, 15, true},
                   {"nu", 0.1, 2.0, 20, false},
                   {"theta", 0.05, 0.45, 9, false},
                   {"tau2", -4.0, 0.0, 17, true}};
      break;
    case Family::GaspariCohn:
      cfg.boxes = {{"sigma2", 0.2, 3.0, 15, false},
                   {"c", 0.025, 0.25, 10, false},
                   {"tau2", -4.0, 0.0, 17, true}};
      break;
    case Family::WendlandMixture:
      if (wm_components == 1) {
        cfg.boxes = {{"alpha1", 0.1, 3.0, 15, false},
                     {"theta1", 0.05, 0.6, 12, false},
                     {"tau2", -4.0, 0.0, 17, true}};
      } else if (wm_components == 2) {
        cfg.boxes = {{"alpha1", 0.1, 3.0, 15, false},
                     {"theta1", 0.05, 0.35, 7, false},
                     {"alpha2", 0.05, 2.0, 12, false},
                     {"theta2", 0.4, 1.0, 7, false},
                     {"tau2", -4.0, 0.0, 17, true}};
      } else {
        throw domain_error("wendland mixture: components must be 1 or 2");
      }
      break;
    case Family::PureNugget:
      cfg.boxes = {{"tau2", -4.0, 1.0, 21, true}};
      break;
  }
  return cfg;
}

DFit fit_d_params(const SpatialDataset& data, const Eigen::MatrixXd& Psi,
                  Family family, const AnnealConfig& anneal, Metric metric) {
  data.check();
  if (data.n_replicates() < 2)
    throw domain_error("fit_d_params: need at least 2 replicates");
  anneal.validate(family);
  if (family == Family::GaspariCohn && metric == Metric::GreatCircle)
    throw domain_error("gaspari_cohn requires chordal or Euclidean distance");

  const std::size_t ndim = anneal.boxes.size();
  const std::size_t p = ndim - 1;

  // Largest support over the box determines the pair cache radius.
  double max_support = 0.0;
  {
    std::vector<int> hi_idx(ndim);
    for (std::size_t d = 0; d < ndim; ++d) hi_idx[d] = anneal.boxes[d].steps - 1;
    SmallScaleSpec hi_spec = spec_from_state(family, anneal, hi_idx, metric);
    max_support = hi_spec.support();
  }
  const PairCache pc = build_pair_cache(data.locations, max_support, metric);
  const std::vector<SmallScaleSpec> moment_candidates =
      moment_init(family, anneal, pc, data, Psi, max_support, metric);

  std::map<std::vector<int>, EvalOutcome> cache;
  int evaluations = 0, failures = 0;
  auto eval_state = [&](const std::vector<int>& idx) -> const EvalOutcome& {
    auto it = cache.find(idx);
    if (it != cache.end()) return it->second;
    SmallScaleSpec spec = spec_from_state(family, anneal, idx, metric);
    EvalOutcome out = evaluate_proposal(spec, pc, data, Psi);
    ++evaluations;
    if (!out.feasible) ++failures;
    return cache.emplace(idx, std::move(out)).first->second;
  };

  // The covariogram ranks candidate shapes only weakly along trade-off
  // ridges; one likelihood evaluation per candidate picks the seed.
  std::optional<SmallScaleSpec> moment;
  double moment_obj = kInf;
  for (const SmallScaleSpec& cand : moment_candidates) {
    const EvalOutcome e = evaluate_proposal(cand, pc, data, Psi);
    ++evaluations;
    if (std::getenv("FSBGL_DEBUG_MOMENT")) {
      std::fprintf(stderr, "[moment] cand:");
      for (double v : cand.params) std::fprintf(stderr, " %.6g", v);
      std::fprintf(stderr, " tau2=%.6g obj=%.6f feasible=%d\n", cand.tau2,
                   e.objective, int(e.feasible));
    }
    if (!e.feasible) {
      ++failures;
      continue;
    }
    if (e.objective < moment_obj) {
      moment_obj = e.objective;
      moment = cand;
    }
  }

  Rng rng(anneal.seed);
  std::vector<int> cur(ndim), best(ndim);
  for (std::size_t d = 0; d < ndim; ++d)
    cur[d] = (anneal.boxes[d].steps - 1) / 2;  // box center first

  double cur_obj = kInf, best_obj = kInf;
  double scan_lo = kInf, scan_hi = -kInf;
  auto consider = [&](const std::vector<int>& idx) {
    const EvalOutcome& e = eval_state(idx);
    if (!e.feasible) return;
    scan_lo = std::min(scan_lo, e.objective);
    scan_hi = std::max(scan_hi, e.objective);
    if (e.objective < cur_obj) {
      cur = idx;
      cur_obj = e.objective;
    }
    if (e.objective < best_obj) {
      best = idx;
      best_obj = e.objective;
    }
  };
  consider(cur);
  for (int s = 0; s < anneal.init_scan; ++s) {
    std::vector<int> idx(ndim);
    for (std::size_t d = 0; d < ndim; ++d)
      idx[d] = rng.uniform_int(0, anneal.boxes[d].steps - 1);
    consider(idx);
  }
  if (moment) {
    // Covariogram-matched seed, snapped to the lattice: a deterministic basin
    // hint that random scanning rarely lands on in four-plus dimensions.
    std::vector<int> idx(ndim);
    for (std::size_t d = 0; d < ndim; ++d) {
      const ParamBox& b = anneal.boxes[d];
      const double v = d < p ? moment->params[d] : moment->tau2;
      const double u = b.log10 ? std::log10(v) : v;
      idx[d] = (b.steps > 1 && b.hi > b.lo)
                   ? std::clamp<int>(
                         static_cast<int>(std::lround(
                             (u - b.lo) / (b.hi - b.lo) * (b.steps - 1))),
                         0, b.steps - 1)
                   : 0;
    }
    consider(idx);
  }

  double temp = anneal.t0 > 0.0
                    ? anneal.t0
                    : (std::isfinite(scan_hi - scan_lo) && scan_hi > scan_lo
                           ? 0.5 * (scan_hi - scan_lo)
                           : 1.0);
  int low_change = 0;
  for (int step = 0; step < anneal.max_steps && low_change < anneal.window;
       ++step, temp = std::max(temp * anneal.cooling, 1e-12)) {
    const int dim = rng.uniform_int(0, static_cast<int>(ndim) - 1);
    const int off = rng.uniform_int(0, 3);
    const int delta = (off < 2) ? off - 2 : off - 1;  // {-2,-1,1,2}
    const int bound = anneal.boxes[dim].steps - 1;
    std::vector<int> prop = cur;
    prop[dim] = std::clamp(cur[dim] + delta, 0, bound);
    if (prop[dim] == cur[dim]) {
      ++low_change;
      continue;
    }
    const EvalOutcome& e = eval_state(prop);
    const double prev = cur_obj;
    if (e.feasible &&
        (e.objective <= cur_obj ||
         rng.uniform() < std::exp(-(e.objective - cur_obj) / temp))) {
      cur = prop;
      cur_obj = e.objective;
      if (e.objective < best_obj) {
        best = prop;
        best_obj = e.objective;
      }
    }
    const double rel = std::abs(cur_obj - prev) /
                       std::max(std::abs(prev), 1e-12);
    low_change = rel > anneal.rel_tol ? 0 : low_change + 1;
  }

  if (!std::isfinite(best_obj))
    throw numerical_error(
        "fit_d_params: every proposal failed to factorize; no feasible point");

  // Zero-temperature polish: the tail of the cooling schedule as greedy
  // single-step coordinate moves from the best point found.
  cur = best;
  cur_obj = best_obj;
  for (int sweep = 0; sweep < anneal.polish_sweeps; ++sweep) {
    for (std::size_t d = 0; d < ndim; ++d) {
      for (int delta : {-1, +1}) {
        std::vector<int> prop = cur;
        prop[d] = std::clamp(cur[d] + delta, 0, anneal.boxes[d].steps - 1);
        if (prop[d] == cur[d]) continue;
        const EvalOutcome& e = eval_state(prop);
        if (e.feasible && e.objective < cur_obj) {
          cur = prop;
          cur_obj = e.objective;
        }
      }
    }
  }
  best = cur;
  SmallScaleSpec best_spec = spec_from_state(family, anneal, best, metric);

  // Continuous refinement: the lattice anneal localizes the basin, but
  // single-axis lattice moves cannot follow curved ridges (e.g. the Matern
  // smoothness/range trade-off). A deterministic Nelder-Mead simplex in
  // box-scaled coordinates resolves the optimum within the basin.
  const std::vector<std::size_t> free_dims = [&] {
    std::vector<std::size_t> fd;
    for (std::size_t d = 0; d < ndim; ++d)
      if (anneal.boxes[d].hi > anneal.boxes[d].lo && anneal.boxes[d].steps > 1)
        fd.push_back(d);
    return fd;
  }();
  if (anneal.nm_evals > 0 && !free_dims.empty()) {
    const std::size_t F = free_dims.size();
    auto spec_at = [&](const Eigen::VectorXd& t) {
      SmallScaleSpec s = best_spec;
      for (std::size_t f = 0; f < F; ++f) {
        const ParamBox& b = anneal.boxes[free_dims[f]];
        const double u =
            b.lo + (b.hi - b.lo) * std::clamp(t(static_cast<Eigen::Index>(f)),
                                              0.0, 1.0);
        const double v = b.log10 ? std::pow(10.0, u) : u;
        if (free_dims[f] < p)
          s.params[free_dims[f]] = v;
        else
          s.tau2 = v;
      }
      return s;
    };
    int nm_budget = anneal.nm_evals;
    auto t_of_spec = [&](const SmallScaleSpec& s) {
      Eigen::VectorXd t(F);
      for (std::size_t f = 0; f < F; ++f) {
        const ParamBox& b = anneal.boxes[free_dims[f]];
        const double v = free_dims[f] < p ? s.params[free_dims[f]] : s.tau2;
        const double u = b.log10 ? std::log10(v) : v;
        t(static_cast<Eigen::Index>(f)) =
            std::clamp((u - b.lo) / (b.hi - b.lo), 0.0, 1.0);
      }
      return t;
    };
    // One simplex per start point; runs draw from the shared budget and commit
    // their result only if it beats the running best. Pass f0 when the start
    // vertex was already evaluated on the same quantized path.
    auto run_simplex = [&](const Eigen::VectorXd& t0v, double f0, int budget) {
      int left = std::min(budget, nm_budget);
      if (left <= 0) return;
      auto nm_eval = [&](const Eigen::VectorXd& t) {
        const EvalOutcome e = evaluate_proposal(spec_at(t), pc, data, Psi);
        ++evaluations;
        --nm_budget;
        --left;
        if (!e.feasible) ++failures;
        return e.feasible ? e.objective : kInf;
      };
      std::vector<Eigen::VectorXd> X(F + 1, t0v);
      std::vector<double> fx(F + 1);
      fx[0] = std::isfinite(f0) ? f0 : nm_eval(t0v);
      const double h = 0.1;
      for (std::size_t f = 0; f < F; ++f) {
        Eigen::VectorXd v = t0v;
        const Eigen::Index fi = static_cast<Eigen::Index>(f);
        v(fi) += (v(fi) + h <= 1.0) ? h : -h;
        X[f + 1] = v;
        fx[f + 1] = nm_eval(v);
      }
      auto order = [&] {
        std::vector<std::size_t> idx(F + 1);
        for (std::size_t i = 0; i <= F; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        std::vector<Eigen::VectorXd> Xs(F + 1);
        std::vector<double> fs(F + 1);
        for (std::size_t i = 0; i <= F; ++i) {
          Xs[i] = X[idx[i]];
          fs[i] = fx[idx[i]];
        }
        X.swap(Xs);
        fx.swap(fs);
      };
      order();
      while (left > 0) {
        double diam = 0.0;
        for (std::size_t i = 1; i <= F; ++i)
          diam = std::max(diam, (X[i] - X[0]).lpNorm<Eigen::Infinity>());
        if (diam < 1e-3 && std::isfinite(fx[F]) &&
            fx[F] - fx[0] < 1e-9 * std::max(1.0, std::abs(fx[0])))
          break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(F);
        for (std::size_t i = 0; i < F; ++i) centroid += X[i];
        centroid /= double(F);
        const Eigen::VectorXd xr = centroid + (centroid - X[F]);
        const double fr = nm_eval(xr);
        if (fr < fx[0] && left > 0) {
          const Eigen::VectorXd xe = centroid + 2.0 * (centroid - X[F]);
          const double fe = nm_eval(xe);
          X[F] = fe < fr ? xe : xr;
          fx[F] = std::min(fe, fr);
        } else if (fr < fx[F - 1]) {
          X[F] = xr;
          fx[F] = fr;
        } else if (left > 0) {
          const bool outside = fr < fx[F];
          const Eigen::VectorXd base = outside ? xr : X[F];
          const Eigen::VectorXd xc = centroid + 0.5 * (base - centroid);
          const double fc = nm_eval(xc);
          if (fc < std::min(fr, fx[F])) {
            X[F] = xc;
            fx[F] = fc;
          } else {
            for (std::size_t i = 1; i <= F && left > 0; ++i) {
              X[i] = X[0] + 0.5 * (X[i] - X[0]);
              fx[i] = nm_eval(X[i]);
            }
          }
        }
        order();
      }
      if (fx[0] < best_obj) {
        best_obj = fx[0];
        best_spec = spec_at(X[0]);
      }
    };

    Eigen::VectorXd t0v(F);
    for (std::size_t f = 0; f < F; ++f) {
      const ParamBox& b = anneal.boxes[free_dims[f]];
      t0v(static_cast<Eigen::Index>(f)) =
          best[free_dims[f]] / double(b.steps - 1);
    }
    run_simplex(t0v, best_obj,
                moment ? (anneal.nm_evals + 1) / 2 : anneal.nm_evals);
    // Re-evaluate the moment start inside the simplex: pinned dimensions may
    // project it away from the point scored during candidate selection.
    if (moment) run_simplex(t_of_spec(*moment), kInf, nm_budget);
  }

  // Re-derive the result through the public assembly path so the reported
  // statistics are exact (the proposal loop quantizes pair distances).
  DFit out;
  out.spec = best_spec;
  const SparseSymmetric D = assemble_D(data.locations, out.spec);
  const CholeskyD fac(D, out.spec.describe());
  out.stats = center_and_stats(data, Psi, fac);
  const AlphaProfile ap = profile_alpha(out.stats);
  out.alpha = ap.alpha;
  out.objective = ap.objective;
  out.evaluations = evaluations;
  out.failures = failures;
  return out;
}

Eigen::MatrixXd dc_gradient(const Eigen::MatrixXd& Q,
                            const SufficientStats& st) {
  const Eigen::Index k = st.Gram.rows();
  if (Q.rows() != k || Q.cols() != k)
    throw domain_error("dc_gradient: Q dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(Q + st.Gram);
  if (llt.info() != Eigen::Success)
    throw numerical_error("dc_gradient: Q + Gram not positive definite");
  const Eigen::MatrixXd M = llt.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd T = M * st.CrossData;  // M B M = (1/m) T T'
  Eigen::MatrixXd G = M + T * T.transpose() / double(st.m);
  G = 0.5 * (G + G.transpose()).eval();
  return G;
}

QFit fit_Q(const SufficientStats& st, double lambda, double delta,
           const std::optional<Eigen::MatrixXd>& Q0,
           const GlassoOptions& inner) {
  if (lambda < 0.0) throw domain_error("fit_Q: lambda must be >= 0");
  if (!(delta > 0.0)) throw domain_error("fit_Q: delta must be positive");
  const Eigen::Index k = st.Gram.rows();
  QFit out;
  out.Q = Q0 ? *Q0 : Eigen::MatrixXd::Identity(k, k);
  out.diag.objective_trace.push_back(
      penalized_objective(out.Q, st, lambda).total);

  constexpr int kMaxOuter = 200;
  for (int j = 0; j < kMaxOuter; ++j) {
    const Eigen::MatrixXd G = dc_gradient(out.Q, st);
    GlassoResult sol;
    try {
      sol = glasso_solve(G, lambda, out.Q, inner);
    } catch (const numerical_error& e) {
      throw numerical_error("fit_Q: inner solve failed at outer iteration " +
                            std::to_string(j) + ": " + e.what());
    }
    const double rel = (sol.Q - out.Q).norm() / out.Q.norm();
    out.Q = sol.Q;
    out.diag.inner_iterations_total += sol.iterations;
    const double prev = out.diag.objective_trace.back();
    const double next = penalized_objective(out.Q, st, lambda).total;
    // Majorization guarantee: each DC step may not increase the penalized
    // objective (beyond rounding). A violation means numerical breakdown.
    if (next > prev + 1e-9 * std::max(1.0, std::abs(prev)))
      throw numerical_error(
          "fit_Q: penalized objective increased at outer iteration " +
          std::to_string(j) + " (" + format_g17(prev) + " -> " +
          format_g17(next) + ")");
    out.diag.objective_trace.push_back(next);
    out.diag.rel_change.push_back(rel);
    if (rel < delta) {
      out.diag.converged = true;
      break;
    }
  }
  out.diag.outer_iterations = static_cast<int>(out.diag.rel_change.size());
  return out;
}

int flattening_index(const std::vector<double>& lambdas,
                     const std::vector<double>& caics, double flat_tol) {
  if (lambdas.size() != caics.size())
    throw domain_error("flattening_index: length mismatch");
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    const double dec =
        std::abs(std::log10(lambdas[i - 1]) - std::log10(lambdas[i]));
    if (dec <= 0.0) continue;
    const double change = std::abs(caics[i] - caics[i - 1]) /
                          std::max(std::abs(caics[i - 1]), 1e-300) / dec;
    if (change < flat_tol) return static_cast<int>(i);
  }
  return -1;
}

CaicResult caic(const Eigen::MatrixXd& Q, const SmallScaleSpec& spec,
                const SufficientStats& st) {
  const Eigen::Index k = st.Gram.rows();
  if (Q.rows() != k || Q.cols() != k)
    throw domain_error("caic: Q dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(Q + st.Gram);
  if (llt.info() != Eigen::Success)
    throw numerical_error("caic: Q + Gram not positive definite");
  const Eigen::MatrixXd M = llt.solve(Eigen::MatrixXd::Identity(k, k));
  CaicResult out;
  out.hat_trace = (M * st.Gram).trace();
  out.df_e = out.hat_trace + spec.free_param_count();
  const double nll = negloglik_reduced(Q, st);
  out.caic = st.m * (nll + st.n * kLog2Pi) + 2.0 * out.df_e;
  return out;
}

SelectionResult select_lambda(const SufficientStats& st,
                              const SmallScaleSpec& spec,
                              const std::vector<double>& lambda_grid,
                              double delta,
                              const std::optional<Eigen::MatrixXd>& Q0,
                              const GlassoOptions& inner, double flat_tol) {
  if (lambda_grid.empty()) throw domain_error("select_lambda: empty grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0))
      throw domain_error("select_lambda: grid values must be positive");
    if (i > 0 && lambda_grid[i] >= lambda_grid[i - 1])
      throw domain_error("select_lambda: grid must be strictly descending");
  }

  SelectionResult res;
  std::optional<Eigen::MatrixXd> warm = Q0;
  std::string first_error;
  for (double lam : lambda_grid) {
    try {
      LambdaFit lf;
      lf.lambda = lam;
      lf.fit = fit_Q(st, lam, delta, warm, inner);
      lf.ic = caic(lf.fit.Q, spec, st);
      lf.fit.diag.hat_trace = lf.ic.hat_trace;
      lf.fit.diag.df_e = lf.ic.df_e;
      lf.fit.diag.caic = lf.ic.caic;
      warm = lf.fit.Q;
      res.fits.push_back(std::move(lf));
    } catch (const std::exception& e) {
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (res.fits.empty())
    throw numerical_error("select_lambda: every grid point failed: " +
                          first_error);

  std::vector<double> lams(res.fits.size()), caics(res.fits.size());
  for (std::size_t i = 0; i < res.fits.size(); ++i) {
    lams[i] = res.fits[i].lambda;
    caics[i] = res.fits[i].ic.caic;
  }
  int pick = flattening_index(lams, caics, flat_tol);
  if (pick < 0) {
    pick = 0;
    for (std::size_t i = 1; i < res.fits.size(); ++i)
      if (res.fits[i].ic.caic < res.fits[pick].ic.caic)
        pick = static_cast<int>(i);
  }
  res.index = pick;
  res.lambda_star = res.fits[pick].lambda;
  return res;
}

SelectionResult select_lambda(const SpatialDataset& data,
                              const Eigen::MatrixXd& Psi,
                              const SmallScaleSpec& spec,
                              const std::vector<double>& lambda_grid,
                              double delta,
                              const std::optional<Eigen::MatrixXd>& Q0,
                              const GlassoOptions& inner, double flat_tol) {
  const SufficientStats st =
      center_and_stats(data, Psi, assemble_D(data.locations, spec));
  return select_lambda(st, spec, lambda_grid, delta, Q0, inner, flat_tol);
}

std::vector<double> decade_lambda_grid() {
  return {10.0, std::pow(10.0, 0.5), 1.0, std::pow(10.0, -0.5), 0.1};
}

std::vector<double> wide_lambda_grid(int points_per_decade) {
  if (points_per_decade < 1)
    throw domain_error("lambda grid: points_per_decade must be >= 1");
  std::vector<double> grid;
  const double lo = std::log10(0.002);
  for (double t = 2.0; t > lo + 1e-12; t -= 1.0 / points_per_decade)
    grid.push_back(std::pow(10.0, t));
  grid.push_back(0.002);
  return grid;
}

}  // namespace fsbgl
