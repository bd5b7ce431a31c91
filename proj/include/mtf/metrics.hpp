#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtf/labels.hpp"
#include "mtf/linalg.hpp"

namespace mtf {

struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;  // [predicted][true]
  std::vector<std::size_t> pred_totals;
  std::vector<std::size_t> true_totals;
  std::size_t n = 0;
};

/// Labels are compacted first, so unused label values do not add rows/columns.
ContingencyTable contingency(const Labels& pred, const Labels& truth);

/// Mutual information over sqrt(H(pred) H(truth)), natural logs. 1 when both
/// partitions are a single identical cluster, 0 when only one entropy is 0.
double nmi(const Labels& pred, const Labels& truth);

/// Fraction of objects labelled correctly under the best one-to-one mapping
/// of predicted clusters onto classes.
double matched_accuracy(const Labels& pred, const Labels& truth);

/// Minimum-cost assignment on a square cost matrix (Hungarian / Kuhn-Munkres).
/// Returns, for each row, the assigned column.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

double cosine(std::span<const double> a, std::span<const double> b);

/// (1/|c|^2) sum over all ordered pairs (x, x') of the cluster, self-pairs
/// included, of cosine(x, x').
double cluster_cohesiveness(const DenseMatrix& members);

/// Sum over non-empty clusters of cohesiveness(c_i) / |c_i|.
double solution_cohesiveness(const Labels& labels, const DenseMatrix& data);

struct MetricReport {
  double nmi = 0.0;
  double accuracy = 0.0;
  double cohesiveness = 0.0;

  /// "nmi=...\naccuracy=...\ncohesiveness=...\n"
  std::string to_key_value() const;
  static std::string csv_header();  // "nmi,accuracy,cohesiveness"
  std::string to_csv_row() const;
};

}  // namespace mtf
