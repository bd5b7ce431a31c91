#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mtf/linalg.hpp"

namespace test {

inline mtf::DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  mtf::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline mtf::SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density,
                                       std::mt19937_64& rng, bool nonnegative = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mtf::Triplet> entries;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (u(rng) < density) {
        double v = 0.05 + u(rng);
        if (!nonnegative && u(rng) < 0.5) v = -v;
        entries.push_back({i, j, v});
      }
  return mtf::SparseMatrix::from_triplets(rows, cols, std::move(entries), nonnegative);
}

inline double max_abs_diff(const mtf::DenseMatrix& a, const mtf::DenseMatrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
  return worst;
}

}  // namespace test
