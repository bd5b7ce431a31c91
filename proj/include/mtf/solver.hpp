#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mtf/data.hpp"
#include "mtf/graphs.hpp"
#include "mtf/labels.hpp"
#include "mtf/linalg.hpp"

namespace mtf {

struct SolverConfig {
  std::size_t clusters = 2;
  double lambda = 10.0;  // intra-manifold weight
  double delta = 1.0;    // inter-manifold weight
  std::size_t k = 5;     // intra kNN size
  std::size_t p = 5;     // inter pNN size
  std::size_t max_iters = 500;
  double rel_tol = 1e-6;
  double zero_floor = 1e-12;  // floor on the update denominator
  double smoothing = 0.2;     // added to the K-means indicator before normalizing
  double ridge_scale = 1e-10; // fallback ridge, relative to the Gram diagonal mean
  std::size_t max_backtracks = 20;
  std::uint64_t seed = 0;

  /// Throws ContractViolation when a field is out of range.
  void validate() const;
};

struct FactorState {
  std::vector<DenseMatrix> G;          // n_h x c per type, non-negative
  std::map<TypePair, DenseMatrix> S;   // c x c per stored pair h < l
};

struct ObjectiveBreakdown {
  double reconstruction = 0.0;  // sum_{h<l} ||R_hl - G_h S_hl G_l^T||_F^2
  double intra = 0.0;           // sum_h Tr(G_h^T Q_h G_h)
  double inter = 0.0;           // -2 delta sum_{h<l} Tr(G_h^T Q_hl G_l)
  double total = 0.0;
};

struct SolveReport {
  FactorState state;
  std::vector<ObjectiveBreakdown> trace;  // trace[0] is the initial state
  std::size_t iterations = 0;
  bool converged = false;
};

/// K-means on each type's relation rows, indicator + smoothing, l1 row
/// normalization, then one closed-form S update per pair.
FactorState init_factors(const MultiAspectDataset& dataset, const SolverConfig& config);

/// S = (G_h^T G_h)^{-1} G_h^T R G_l (G_l^T G_l)^{-1}. A Gram matrix that will
/// not factorize is retried with ridge_scale * mean(diag) added; failure
/// after that throws SingularMatrixError. S is not sign-constrained.
DenseMatrix update_S(const DenseMatrix& gh, const DenseMatrix& gl, const SparseMatrix& r,
                     double ridge_scale = 1e-10);

struct GradientParts {
  DenseMatrix a;  // A_h (n_h x c)
  DenseMatrix b;  // B_h (c x c), symmetric
};

/// A_h and B_h such that dJ/dG_h = 2 (Q_h G_h + A_h + G_h B_h):
///   A_h = sum_{l>h} (-R_hl G_l S_hl^T - delta Q_hl G_l)
///       + sum_{l<h} (-R_lh^T G_l S_lh - delta Q_lh^T G_l)
///   B_h = sum_{l>h} S_hl G_l^T G_l S_hl^T + sum_{l<h} S_lh^T G_l^T G_l S_lh
GradientParts compute_AB(std::size_t h, const FactorState& state,
                         const MultiAspectDataset& dataset, const ManifoldAggregates& aggregates,
                         double delta);

/// Element-wise ratio (Q_h^- G + A^- + G B^-) / max(Q_h^+ G + A^+ + G B^+, floor).
/// The negative parts of the gradient sit in the numerator.
DenseMatrix update_ratio(std::size_t h, const FactorState& state,
                         const ManifoldAggregates& aggregates, const GradientParts& parts,
                         double zero_floor);

/// G_h * sqrt(update_ratio). Zero entries stay zero.
DenseMatrix update_G(std::size_t h, const FactorState& state,
                     const ManifoldAggregates& aggregates, const GradientParts& parts,
                     double zero_floor);

/// Divides each row by its l1 norm; all-zero rows become uniform 1/c.
DenseMatrix normalize_G(const DenseMatrix& g);

ObjectiveBreakdown objective(const FactorState& state, const MultiAspectDataset& dataset,
                             const ManifoldAggregates& aggregates, double delta);

/// The part of the objective that depends on G_h: reconstruction of every
/// relation touching h, Tr(G_h^T Q_h G_h), and the coupling terms with h.
double objective_terms_for(std::size_t h, const FactorState& state,
                           const MultiAspectDataset& dataset,
                           const ManifoldAggregates& aggregates, double delta);

/// Analytic dJ/dG_h with every other block held fixed.
DenseMatrix objective_gradient(std::size_t h, const FactorState& state,
                               const MultiAspectDataset& dataset,
                               const ManifoldAggregates& aggregates, double delta);

/// Runs the alternating scheme on prebuilt graphs: each iteration updates
/// every S_hl from one G snapshot, then each G_h in ascending h using the
/// freshest factors, normalizing after every G update. Stops when the
/// relative change of the total objective drops below rel_tol.
///
/// Row normalization is not covered by the multiplicative update's descent
/// guarantee. When the normalized update would raise the G_h-dependent part
/// of the objective, the step is halved along the segment from the current
/// G_h (both ends are non-negative with unit row sums) up to
/// `max_backtracks` times, and G_h is left unchanged if nothing helps.
SolveReport solve(const MultiAspectDataset& dataset, const SolverConfig& config,
                  const GraphSet& graphs);
/// As above, starting from a given state instead of init_factors.
SolveReport solve_from(const MultiAspectDataset& dataset, const SolverConfig& config,
                       const GraphSet& graphs, FactorState initial);
/// Builds the graphs, then solves.
SolveReport solve(const MultiAspectDataset& dataset, const SolverConfig& config);

/// Seeded K-means on the rows of every G_h.
std::vector<Labels> extract_labels(const FactorState& state, const SolverConfig& config);

}  // namespace mtf
