#include "mtf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace mtf {

namespace {

// Maps label values onto 0..k-1 in order of first appearance.
std::vector<std::size_t> compact(const Labels& labels, std::size_t& k) {
  std::map<std::size_t, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (std::size_t v : labels) {
    auto [it, inserted] = ids.emplace(v, ids.size());
    out.push_back(it->second);
  }
  k = ids.size();
  return out;
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ContingencyTable contingency(const Labels& pred, const Labels& truth) {
  require(pred.size() == truth.size(), "contingency: " + std::to_string(pred.size()) +
                                           " predicted labels vs " +
                                           std::to_string(truth.size()) + " true labels");
  std::size_t kp = 0, kt = 0;
  const auto p = compact(pred, kp);
  const auto t = compact(truth, kt);
  ContingencyTable table;
  table.counts.assign(kp, std::vector<std::size_t>(kt, 0));
  table.pred_totals.assign(kp, 0);
  table.true_totals.assign(kt, 0);
  table.n = pred.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    table.counts[p[i]][t[i]]++;
    table.pred_totals[p[i]]++;
    table.true_totals[t[i]]++;
  }
  return table;
}

double nmi(const Labels& pred, const Labels& truth) {
  require(!pred.empty(), "nmi: empty labelling");
  const auto table = contingency(pred, truth);
  const double n = static_cast<double>(table.n);
  auto entropy = [n](const std::vector<std::size_t>& totals) {
    double h = 0.0;
    for (std::size_t c : totals)
      if (c > 0) {
        const double q = static_cast<double>(c) / n;
        h -= q * std::log(q);
      }
    return h;
  };
  const double hp = entropy(table.pred_totals);
  const double ht = entropy(table.true_totals);
  if (table.pred_totals.size() == 1 && table.true_totals.size() == 1) return 1.0;
  if (hp <= 0.0 || ht <= 0.0) return 0.0;

  double mi = 0.0;
  for (std::size_t a = 0; a < table.counts.size(); ++a)
    for (std::size_t b = 0; b < table.counts[a].size(); ++b) {
      const auto c = table.counts[a][b];
      if (c == 0) continue;
      const double joint = static_cast<double>(c) / n;
      mi += joint * std::log(static_cast<double>(c) * n /
                             (static_cast<double>(table.pred_totals[a]) *
                              static_cast<double>(table.true_totals[b])));
    }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost) require(row.size() == n, "solve_assignment: cost not square");
  if (n == 0) return {};
  // Shortest augmenting path with row/column potentials; 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double matched_accuracy(const Labels& pred, const Labels& truth) {
  const auto table = contingency(pred, truth);
  if (table.n == 0) return 1.0;
  const std::size_t k = std::max(table.pred_totals.size(), table.true_totals.size());
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < table.counts.size(); ++a)
    for (std::size_t b = 0; b < table.counts[a].size(); ++b)
      cost[a][b] = -static_cast<double>(table.counts[a][b]);
  const auto assignment = solve_assignment(cost);
  std::size_t correct = 0;
  for (std::size_t a = 0; a < table.counts.size(); ++a)
    if (assignment[a] < table.true_totals.size()) correct += table.counts[a][assignment[a]];
  return static_cast<double>(correct) / static_cast<double>(table.n);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cluster_cohesiveness(const DenseMatrix& members) {
  require(members.rows() >= 1, "cluster_cohesiveness: empty cluster");
  double total = 0.0;
  for (std::size_t i = 0; i < members.rows(); ++i)
    for (std::size_t j = 0; j < members.rows(); ++j) total += cosine(members.row(i), members.row(j));
  const double size = static_cast<double>(members.rows());
  return total / (size * size);
}

double solution_cohesiveness(const Labels& labels, const DenseMatrix& data) {
  require(labels.size() == data.rows(), "solution_cohesiveness: one label per data row required");
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < labels.size(); ++i) clusters[labels[i]].push_back(i);
  double total = 0.0;
  for (const auto& [label, rows] : clusters) {
    DenseMatrix members(rows.size(), data.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(data.row(rows[r]).begin(), data.row(rows[r]).end(), members.row(r).begin());
    total += cluster_cohesiveness(members) / static_cast<double>(rows.size());
  }
  return total;
}

std::string MetricReport::to_key_value() const {
  return "nmi=" + format(nmi) + "\naccuracy=" + format(accuracy) +
         "\ncohesiveness=" + format(cohesiveness) + "\n";
}

std::string MetricReport::csv_header() { return "nmi,accuracy,cohesiveness"; }

std::string MetricReport::to_csv_row() const {
  return format(nmi) + "," + format(accuracy) + "," + format(cohesiveness);
}

}  // namespace mtf
