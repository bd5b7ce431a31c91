#include "mtf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtf/kmeans.hpp"
#include "mtf/parallel.hpp"
#include "mtf/seed.hpp"

namespace mtf {

namespace {

DenseMatrix gram_inverse(const DenseMatrix& gram, double ridge_scale) {
  try {
    return ridge_inverse(gram, 0.0);
  } catch (const SingularMatrixError&) {
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i) mean += gram(i, i);
  mean /= static_cast<double>(std::max<std::size_t>(gram.rows(), 1));
  const double ridge = mean > 0.0 ? ridge_scale * mean : ridge_scale;
  return ridge_inverse(gram, ridge);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// sum_ij m_ij <left_i, right_j>, i.e. Tr(left^T M right), over stored entries.
double sparse_bilinear_trace(const SparseMatrix& m, const DenseMatrix& left,
                             const DenseMatrix& right) {
  std::vector<double> per_row(m.rows(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(dynamic, 16) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto cols = m.row_cols(i);
    const auto vals = m.row_values(i);
    double s = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * dot(left.row(i), right.row(cols[k]));
    per_row[i] = s;
  }
  double total = 0.0;
  for (double v : per_row) total += v;
  return total;
}

// ||R - G_h S G_l^T||_F^2 evaluated entry by entry.
double reconstruction_error(const SparseMatrix& r, const DenseMatrix& gh, const DenseMatrix& s,
                            const DenseMatrix& gl) {
  const DenseMatrix ghs = matmul(gh, s);
  std::vector<double> per_row(r.rows(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(r.rows());
#pragma omp parallel for schedule(static) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto u = ghs.row(i);
    const auto cols = r.row_cols(i);
    const auto vals = r.row_values(i);
    std::size_t next = 0;
    double acc = 0.0;
    for (std::size_t j = 0; j < r.cols(); ++j) {
      double target = 0.0;
      if (next < cols.size() && cols[next] == j) target = vals[next++];
      const double diff = target - dot(u, gl.row(j));
      acc += diff * diff;
    }
    per_row[i] = acc;
  }
  double total = 0.0;
  for (double v : per_row) total += v;
  return total;
}

// Same quantity through ||R||^2 - 2 Tr(S^T G_h^T R G_l) + Tr(G_h^T G_h S G_l^T G_l S^T);
// O(nnz c + n c^2) instead of O(n_h n_l c).
double reconstruction_error_expanded(const SparseMatrix& r, const DenseMatrix& gh,
                                     const DenseMatrix& s, const DenseMatrix& gl) {
  const double norm = frobenius_norm(r);
  const double cross = trace_product(matmul(gh, s), matmul(r, gl));
  const double quad = trace_product(matmul(matmul_tn(gh, gh), s), matmul(s, matmul_tn(gl, gl)));
  return norm * norm - 2.0 * cross + quad;
}

}  // namespace

void SolverConfig::validate() const {
  require(clusters >= 2, "config: need at least 2 clusters");
  require(lambda >= 0.0, "config: lambda must be non-negative");
  require(delta >= 0.0, "config: delta must be non-negative");
  require(k >= 1, "config: k must be at least 1");
  require(p >= 1, "config: p must be at least 1");
  require(rel_tol > 0.0, "config: rel_tol must be positive");
  require(zero_floor >= 0.0, "config: zero_floor must be non-negative");
  require(smoothing >= 0.0, "config: smoothing must be non-negative");
}

FactorState init_factors(const MultiAspectDataset& dataset, const SolverConfig& config) {
  FactorState state;
  for (std::size_t h = 0; h < dataset.type_count(); ++h) {
    const DenseMatrix features = type_feature_rows(dataset, h);
    require(features.rows() >= config.clusters,
            "init_factors: type " + std::to_string(h) + " has fewer objects than clusters");
    const auto km =
        kmeans(features, config.clusters, derive_seed(config.seed, SeedStream::KMeansInit, h));
    DenseMatrix g = labels_to_indicator(km.labels, config.clusters);
    for (double& v : g.values()) v += config.smoothing;
    state.G.push_back(normalize_G(g));
  }
  for (const auto& [h, l] : dataset.pairs())
    state.S[{h, l}] = update_S(state.G[h], state.G[l], dataset.relation(h, l), config.ridge_scale);
  return state;
}

DenseMatrix update_S(const DenseMatrix& gh, const DenseMatrix& gl, const SparseMatrix& r,
                     double ridge_scale) {
  require(gh.rows() == r.rows() && gl.rows() == r.cols() && gh.cols() == gl.cols(),
          "update_S: factor shapes do not match the relation");
  const DenseMatrix inv_h = gram_inverse(matmul_tn(gh, gh), ridge_scale);
  const DenseMatrix inv_l = gram_inverse(matmul_tn(gl, gl), ridge_scale);
  const DenseMatrix cross = matmul_tn(gh, matmul(r, gl));  // G_h^T R G_l
  return matmul(matmul(inv_h, cross), inv_l);
}

GradientParts compute_AB(std::size_t h, const FactorState& state,
                         const MultiAspectDataset& dataset, const ManifoldAggregates& aggregates,
                         double delta) {
  const std::size_t c = state.G.at(h).cols();
  GradientParts parts{DenseMatrix(state.G[h].rows(), c), DenseMatrix(c, c)};
  for (std::size_t l = 0; l < dataset.type_count(); ++l) {
    if (!dataset.has_relation(h, l)) continue;
    const DenseMatrix& gl = state.G[l];
    // s maps G_l coordinates onto G_h coordinates: S_hl^T for l > h is
    // applied as G_l S_hl^T, and S_lh for l < h as G_l S_lh.
    const DenseMatrix s_h_side = h < l ? state.S.at({h, l}).transposed() : state.S.at({l, h});
    const DenseMatrix rg = matmul(dataset.relation(h, l), gl);  // R_hl G_l or R_lh^T G_l
    DenseMatrix term = matmul(rg, s_h_side);
    if (delta != 0.0) term += delta * matmul(aggregates.coupling_for(h, l), gl);
    parts.a += -1.0 * term;

    const DenseMatrix gram = matmul_tn(gl, gl);
    parts.b += matmul(matmul(s_h_side.transposed(), gram), s_h_side);
  }
  // Exact symmetry; the triple product leaves round-off asymmetry.
  for (std::size_t x = 0; x < c; ++x)
    for (std::size_t y = x + 1; y < c; ++y) {
      const double v = 0.5 * (parts.b(x, y) + parts.b(y, x));
      parts.b(x, y) = v;
      parts.b(y, x) = v;
    }
  return parts;
}

DenseMatrix update_ratio(std::size_t h, const FactorState& state,
                         const ManifoldAggregates& aggregates, const GradientParts& parts,
                         double zero_floor) {
  const DenseMatrix& g = state.G.at(h);
  const auto q = pos_neg_split(aggregates.regularizer.at(h));
  const auto a = pos_neg_split(parts.a);
  const auto b = pos_neg_split(parts.b);
  DenseMatrix numerator = matmul(q.minus, g) + a.minus + matmul(g, b.minus);
  const DenseMatrix denominator = matmul(q.plus, g) + a.plus + matmul(g, b.plus);
  auto num = numerator.values();
  const auto den = denominator.values();
  for (std::size_t k = 0; k < num.size(); ++k) num[k] /= std::max(den[k], zero_floor);
  return numerator;
}

DenseMatrix update_G(std::size_t h, const FactorState& state,
                     const ManifoldAggregates& aggregates, const GradientParts& parts,
                     double zero_floor) {
  DenseMatrix g = state.G.at(h);
  const DenseMatrix ratio = update_ratio(h, state, aggregates, parts, zero_floor);
  auto gv = g.values();
  const auto rv = ratio.values();
  for (std::size_t k = 0; k < gv.size(); ++k)
    if (gv[k] != 0.0) gv[k] *= std::sqrt(rv[k]);
  return g;
}

DenseMatrix normalize_G(const DenseMatrix& g) {
  DenseMatrix out = g;
  const double uniform = 1.0 / static_cast<double>(std::max<std::size_t>(g.cols(), 1));
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto row = out.row(i);
    double sum = 0.0;
    for (double v : row) sum += v;
    for (double& v : row) v = sum > 0.0 ? v / sum : uniform;
  }
  return out;
}

ObjectiveBreakdown objective(const FactorState& state, const MultiAspectDataset& dataset,
                             const ManifoldAggregates& aggregates, double delta) {
  ObjectiveBreakdown out;
  for (const auto& [h, l] : dataset.pairs()) {
    out.reconstruction += reconstruction_error(dataset.relation(h, l), state.G.at(h),
                                               state.S.at({h, l}), state.G.at(l));
    if (delta != 0.0)
      out.inter += -2.0 * delta *
                   sparse_bilinear_trace(aggregates.coupling.at({h, l}), state.G[h], state.G[l]);
  }
  for (std::size_t h = 0; h < dataset.type_count(); ++h)
    out.intra += sparse_bilinear_trace(aggregates.regularizer.at(h), state.G[h], state.G[h]);
  out.total = out.reconstruction + out.intra + out.inter;
  return out;
}

double objective_terms_for(std::size_t h, const FactorState& state,
                           const MultiAspectDataset& dataset,
                           const ManifoldAggregates& aggregates, double delta) {
  double total = sparse_bilinear_trace(aggregates.regularizer.at(h), state.G.at(h), state.G[h]);
  for (const auto& [a, b] : dataset.pairs()) {
    if (a != h && b != h) continue;
    total += reconstruction_error_expanded(dataset.relation(a, b), state.G.at(a),
                                           state.S.at({a, b}), state.G.at(b));
    if (delta != 0.0)
      total += -2.0 * delta *
               sparse_bilinear_trace(aggregates.coupling.at({a, b}), state.G[a], state.G[b]);
  }
  return total;
}

DenseMatrix objective_gradient(std::size_t h, const FactorState& state,
                               const MultiAspectDataset& dataset,
                               const ManifoldAggregates& aggregates, double delta) {
  const auto parts = compute_AB(h, state, dataset, aggregates, delta);
  const DenseMatrix& g = state.G.at(h);
  return 2.0 * (matmul(aggregates.regularizer.at(h), g) + parts.a + matmul(g, parts.b));
}

SolveReport solve(const MultiAspectDataset& dataset, const SolverConfig& config,
                  const GraphSet& graphs) {
  config.validate();
  dataset.check_complete();
  return solve_from(dataset, config, graphs, init_factors(dataset, config));
}

SolveReport solve_from(const MultiAspectDataset& dataset, const SolverConfig& config,
                       const GraphSet& graphs, FactorState initial) {
  config.validate();
  dataset.check_complete();
  const auto& agg = graphs.aggregates;
  require(initial.G.size() == dataset.type_count(), "solve_from: one factor per type required");

  SolveReport report;
  report.state = std::move(initial);
  report.trace.push_back(objective(report.state, dataset, agg, config.delta));

  FactorState& st = report.state;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    for (const auto& [h, l] : dataset.pairs())
      st.S[{h, l}] = update_S(st.G[h], st.G[l], dataset.relation(h, l), config.ridge_scale);
    for (std::size_t h = 0; h < dataset.type_count(); ++h) {
      const auto parts = compute_AB(h, st, dataset, agg, config.delta);
      const DenseMatrix current = st.G[h];
      const double before = objective_terms_for(h, st, dataset, agg, config.delta);
      const DenseMatrix step = normalize_G(update_G(h, st, agg, parts, config.zero_floor)) - current;
      double alpha = 1.0;
      bool accepted = false;
      for (std::size_t b = 0; b <= config.max_backtracks; ++b, alpha *= 0.5) {
        st.G[h] = current + alpha * step;
        if (objective_terms_for(h, st, dataset, agg, config.delta) <= before) {
          accepted = true;
          break;
        }
      }
      if (!accepted) st.G[h] = current;
    }
    report.trace.push_back(objective(st, dataset, agg, config.delta));
    report.iterations = it + 1;

    const double prev = report.trace[report.trace.size() - 2].total;
    const double cur = report.trace.back().total;
    const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
    if (std::abs(prev - cur) / scale < config.rel_tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

SolveReport solve(const MultiAspectDataset& dataset, const SolverConfig& config) {
  config.validate();
  const GraphSet graphs = build_graphs(dataset, config.k, config.p, config.lambda, config.delta);
  return solve(dataset, config, graphs);
}

std::vector<Labels> extract_labels(const FactorState& state, const SolverConfig& config) {
  std::vector<Labels> labels;
  for (std::size_t h = 0; h < state.G.size(); ++h)
    labels.push_back(
        kmeans(state.G[h], config.clusters, derive_seed(config.seed, SeedStream::KMeansExtract, h))
            .labels);
  return labels;
}

}  // namespace mtf
