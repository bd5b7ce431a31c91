#pragma once

#include <map>
#include <vector>

#include "mtf/data.hpp"
#include "mtf/linalg.hpp"

namespace mtf {

/// kNN affinity of one object type with its degree matrix and Laplacian.
struct IntraGraph {
  SparseMatrix weights;  // W, symmetric, zero diagonal
  DiagMatrix degree;     // D_ii = sum_j W_ij
  SparseMatrix laplacian;  // L = D - W
};

/// pNN affinity between two types, taken directly from R.
struct InterGraph {
  SparseMatrix affinity;  // Z (n_h x n_l), entries copied from R
  DiagMatrix row_degree;  // T^r
  DiagMatrix col_degree;  // T^c
};

/// Everything the multiplicative updates need from the graphs.
struct ManifoldAggregates {
  std::vector<DiagMatrix> degree;        // T_h
  std::vector<SparseMatrix> regularizer;  // Q_h = lambda L_h + delta T_h
  std::map<TypePair, SparseMatrix> coupling;  // Q_hl = Z_hl + Z_lh^T, h < l
  std::map<TypePair, SparseMatrix> coupling_t;  // Q_hl^T, keyed by (h, l) with h < l

  /// Q_hl for h < l, Q_lh^T for h > l.
  const SparseMatrix& coupling_for(std::size_t h, std::size_t l) const;
};

/// Row i concatenates row i of R_hl for every related type l in ascending
/// order (for l < h that row is column i of the stored R_lh).
DenseMatrix type_feature_rows(const MultiAspectDataset& dataset, std::size_t h);

/// Symmetric kNN graph under cosine similarity. j is linked to i when j is
/// among the k most similar rows to i or i among the k most similar to j.
/// Rows tied with the k-th similarity are all kept. Zero-similarity pairs are
/// never stored.
IntraGraph build_intra_knn(const DenseMatrix& features, std::size_t k);

/// D = diag(row sums of W), L = D - W. W must be symmetric and non-negative.
IntraGraph build_laplacian(const SparseMatrix& weights);

/// z_ij = r_ij when r_ij is among the p largest stored entries of row i or
/// of column j of R (ties to the lower index), 0 otherwise.
InterGraph build_inter_pnn(const SparseMatrix& relation, std::size_t p);

/// `inter` is keyed by ordered pair (h, l) for every h != l with a relation.
ManifoldAggregates assemble_aggregates(const std::map<TypePair, InterGraph>& inter,
                                       const std::vector<IntraGraph>& intra, double lambda,
                                       double delta);

/// Every graph for a dataset, built in one pass.
struct GraphSet {
  std::vector<IntraGraph> intra;
  std::map<TypePair, InterGraph> inter;
  ManifoldAggregates aggregates;
};

GraphSet build_graphs(const MultiAspectDataset& dataset, std::size_t k, std::size_t p,
                      double lambda, double delta);

}  // namespace mtf
