#include "mtf/reference.hpp"

#include <cmath>

namespace mtf::reference {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "reference::matmul: shape mismatch");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "reference::matmul: shape mismatch");
  DenseMatrix out(a.rows(), b.cols());
  for (const auto& t : a.triplets())
    for (std::size_t j = 0; j < b.cols(); ++j) out(t.row, j) += t.value * b(t.col, j);
  return out;
}

DenseMatrix cosine_similarity(const DenseMatrix& features) {
  const std::size_t n = features.rows();
  DenseMatrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t k = 0; k < features.cols(); ++k) {
        dot += features(i, k) * features(j, k);
        ni += features(i, k) * features(i, k);
        nj += features(j, k) * features(j, k);
      }
      sim(i, j) = (ni > 0.0 && nj > 0.0) ? dot / (std::sqrt(ni) * std::sqrt(nj)) : 0.0;
    }
  return sim;
}

}  // namespace mtf::reference
