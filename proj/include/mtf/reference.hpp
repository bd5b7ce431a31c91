#pragma once

// Serial, straightforward versions of the parallel kernels. They exist to be
// compared against: unit tests use them as oracles and bench_kernels times
// them next to the OpenMP paths.

#include "mtf/linalg.hpp"

namespace mtf::reference {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b);

/// Full n x n cosine similarity between rows; zero-norm rows give 0.
DenseMatrix cosine_similarity(const DenseMatrix& features);

}  // namespace mtf::reference
