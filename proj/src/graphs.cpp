#include "mtf/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mtf/parallel.hpp"

namespace mtf {

namespace {

struct Scored {
  double score;
  std::size_t index;
};

bool ranks_before(const Scored& a, const Scored& b) {
  return a.score != b.score ? a.score > b.score : a.index < b.index;
}

// Keeps the `count` best entries (highest score, lower index on ties).
void keep_top(std::vector<Scored>& items, std::size_t count) {
  if (items.size() > count) {
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(count),
                      items.end(), ranks_before);
    items.resize(count);
  }
}

}  // namespace

const SparseMatrix& ManifoldAggregates::coupling_for(std::size_t h, std::size_t l) const {
  require(h != l, "coupling_for: h == l");
  return h < l ? coupling.at({h, l}) : coupling_t.at({l, h});
}

DenseMatrix type_feature_rows(const MultiAspectDataset& dataset, std::size_t h) {
  require(h < dataset.type_count(), "type_feature_rows: type index out of range");
  std::size_t width = 0;
  for (std::size_t l = 0; l < dataset.type_count(); ++l)
    if (dataset.has_relation(h, l)) width += dataset.size(l);

  DenseMatrix features(dataset.size(h), width);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < dataset.type_count(); ++l) {
    if (!dataset.has_relation(h, l)) continue;
    const auto& r = dataset.relation(h, l);
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const auto cols = r.row_cols(i);
      const auto vals = r.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) features(i, offset + cols[k]) = vals[k];
    }
    offset += dataset.size(l);
  }
  return features;
}

IntraGraph build_intra_knn(const DenseMatrix& features, std::size_t k) {
  const std::size_t n = features.rows();
  require(k >= 1, "build_intra_knn: k must be at least 1");
  require(k < n, "build_intra_knn: k must be smaller than the number of objects");

  DenseMatrix unit = features;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = unit.row(i);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : row) v = norm > 0.0 ? v / norm : 0.0;
  }

  std::vector<std::vector<std::size_t>> neighbors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto ui = unit.row(i);
    std::vector<Scored> scored;
    scored.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto uj = unit.row(j);
      double dot = 0.0;
      for (std::size_t d = 0; d < ui.size(); ++d) dot += ui[d] * uj[d];
      scored.push_back({dot, j});
    }
    // Every row tied with the k-th best stays, so equal rows link to each other.
    std::sort(scored.begin(), scored.end(), ranks_before);
    const double cutoff = scored[k - 1].score;
    for (const auto& s : scored) {
      if (s.score < cutoff) break;
      if (s.score > 0.0) neighbors[i].push_back(s.index);
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : neighbors[i]) edges.insert({std::min(i, j), std::max(i, j)});

  std::vector<Triplet> entries;
  entries.reserve(2 * edges.size());
  for (const auto& [i, j] : edges) {
    const auto ui = unit.row(i);
    const auto uj = unit.row(j);
    double dot = 0.0;
    for (std::size_t d = 0; d < ui.size(); ++d) dot += ui[d] * uj[d];
    // Round-off can push the cosine of parallel vectors a hair above 1.
    dot = std::min(dot, 1.0);
    entries.push_back({i, j, dot});
    entries.push_back({j, i, dot});
  }
  return build_laplacian(SparseMatrix::from_triplets(n, n, std::move(entries), true));
}

IntraGraph build_laplacian(const SparseMatrix& weights) {
  require(weights.rows() == weights.cols(), "build_laplacian: W must be square");
  require(weights.is_symmetric(), "build_laplacian: W must be symmetric");
  for (std::size_t i = 0; i < weights.rows(); ++i)
    for (double v : weights.row_values(i))
      require(v >= 0.0, "build_laplacian: W must be non-negative");
  for (std::size_t i = 0; i < weights.rows(); ++i)
    require(weights.at(i, i) == 0.0, "build_laplacian: W must have a zero diagonal");

  DiagMatrix degree(row_sums(weights));
  SparseMatrix laplacian = add(degree.to_sparse(), weights, 1.0, -1.0);
  return {SparseMatrix::from_triplets(weights.rows(), weights.cols(), weights.triplets(), true),
          std::move(degree), std::move(laplacian)};
}

InterGraph build_inter_pnn(const SparseMatrix& relation, std::size_t p) {
  require(p >= 1, "build_inter_pnn: p must be at least 1");
  const std::size_t rows = relation.rows();
  const std::size_t cols = relation.cols();
  for (std::size_t i = 0; i < rows; ++i)
    for (double v : relation.row_values(i))
      require(v >= 0.0, "build_inter_pnn: relation must be non-negative");

  std::set<std::pair<std::size_t, std::size_t>> kept;
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < rows; ++i) {
    scored.clear();
    const auto c = relation.row_cols(i);
    const auto v = relation.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) scored.push_back({v[k], c[k]});
    keep_top(scored, p);
    for (const auto& s : scored) kept.insert({i, s.index});
  }
  const SparseMatrix by_col = relation.transposed();
  for (std::size_t j = 0; j < cols; ++j) {
    scored.clear();
    const auto r = by_col.row_cols(j);
    const auto v = by_col.row_values(j);
    for (std::size_t k = 0; k < r.size(); ++k) scored.push_back({v[k], r[k]});
    keep_top(scored, p);
    for (const auto& s : scored) kept.insert({s.index, j});
  }

  std::vector<Triplet> entries;
  entries.reserve(kept.size());
  for (const auto& [i, j] : kept) entries.push_back({i, j, relation.at(i, j)});
  SparseMatrix z = SparseMatrix::from_triplets(rows, cols, std::move(entries), true);
  DiagMatrix tr(row_sums(z));
  DiagMatrix tc(col_sums(z));
  return {std::move(z), std::move(tr), std::move(tc)};
}

ManifoldAggregates assemble_aggregates(const std::map<TypePair, InterGraph>& inter,
                                       const std::vector<IntraGraph>& intra, double lambda,
                                       double delta) {
  require(lambda >= 0.0 && delta >= 0.0, "assemble_aggregates: weights must be non-negative");
  const std::size_t m = intra.size();
  for (const auto& [key, g] : inter) {
    const auto [h, l] = key;
    require(h < m && l < m && h != l, "assemble_aggregates: bad pair key");
    require(inter.count({l, h}) != 0, "assemble_aggregates: missing graph for pair " +
                                          std::to_string(l) + "-" + std::to_string(h));
    require(g.affinity.rows() == intra[h].weights.rows() &&
                g.affinity.cols() == intra[l].weights.rows(),
            "assemble_aggregates: inter graph shape does not match type sizes");
  }

  ManifoldAggregates agg;
  for (std::size_t h = 0; h < m; ++h) agg.degree.emplace_back(intra[h].weights.rows(), 0.0);
  for (const auto& [key, g] : inter) {
    const auto [h, l] = key;
    // Z_hl contributes its row degrees to T_h and its column degrees to T_l.
    for (std::size_t i = 0; i < g.row_degree.size(); ++i) agg.degree[h](i) += g.row_degree(i);
    for (std::size_t j = 0; j < g.col_degree.size(); ++j) agg.degree[l](j) += g.col_degree(j);
    if (h < l) {
      SparseMatrix q = add(g.affinity, inter.at({l, h}).affinity.transposed());
      agg.coupling_t[key] = q.transposed();
      agg.coupling[key] = std::move(q);
    }
  }
  for (std::size_t h = 0; h < m; ++h)
    agg.regularizer.push_back(
        add(intra[h].laplacian, agg.degree[h].to_sparse(), lambda, delta));
  return agg;
}

GraphSet build_graphs(const MultiAspectDataset& dataset, std::size_t k, std::size_t p,
                      double lambda, double delta) {
  GraphSet graphs;
  for (std::size_t h = 0; h < dataset.type_count(); ++h)
    graphs.intra.push_back(build_intra_knn(type_feature_rows(dataset, h), k));
  for (const auto& [h, l] : dataset.pairs()) {
    graphs.inter[{h, l}] = build_inter_pnn(dataset.relation(h, l), p);
    graphs.inter[{l, h}] = build_inter_pnn(dataset.relation(l, h), p);
  }
  graphs.aggregates = assemble_aggregates(graphs.inter, graphs.intra, lambda, delta);
  return graphs;
}

}  // namespace mtf
