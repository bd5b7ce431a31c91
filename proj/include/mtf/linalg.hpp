#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "mtf/errors.hpp"

namespace mtf {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  DenseMatrix transposed() const;
  bool all_finite() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Sparse matrix with a coordinate interface and compressed-row storage.
///
/// Entries are kept sorted row-major, so iteration order is deterministic.
/// Explicit zeros are dropped on construction. When built with
/// `nonnegative = true` every stored value is strictly positive.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Throws ContractViolation on out-of-range indices, duplicate (row, col)
  /// pairs, non-finite values, or negatives when `nonnegative` is set.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries, bool nonnegative = false);
  static SparseMatrix from_dense(const DenseMatrix& m, bool nonnegative = false);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  bool nonnegative() const { return nonnegative_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// Value at (i, j); zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  std::vector<Triplet> triplets() const;
  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;
  bool is_symmetric() const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool nonnegative_ = false;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

class DiagMatrix {
 public:
  DiagMatrix() = default;
  explicit DiagMatrix(std::size_t size, double fill = 0.0) : diagonal_(size, fill) {}
  explicit DiagMatrix(std::vector<double> diagonal) : diagonal_(std::move(diagonal)) {}

  std::size_t size() const { return diagonal_.size(); }
  double& operator()(std::size_t i) { return diagonal_[i]; }
  double operator()(std::size_t i) const { return diagonal_[i]; }
  std::span<const double> diagonal() const { return diagonal_; }

  SparseMatrix to_sparse() const;

  bool operator==(const DiagMatrix&) const = default;

 private:
  std::vector<double> diagonal_;
};

template <typename M>
struct SignSplit {
  M plus;
  M minus;
};

// Products. Row-parallel under OpenMP; every output row is computed by one
// thread in a fixed order, so results do not depend on the thread count.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const DiagMatrix& a, const DenseMatrix& b);
/// a^T b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a b^T without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

/// plus = (|m|+m)/2, minus = (|m|-m)/2, element-wise.
SignSplit<DenseMatrix> pos_neg_split(const DenseMatrix& m);
SignSplit<SparseMatrix> pos_neg_split(const SparseMatrix& m);

std::vector<double> row_sums(const DenseMatrix& m);
std::vector<double> col_sums(const DenseMatrix& m);
std::vector<double> row_sums(const SparseMatrix& m);
std::vector<double> col_sums(const SparseMatrix& m);

/// Tr(a^T b) = sum_ij a_ij b_ij.
double trace_product(const DenseMatrix& a, const DenseMatrix& b);

/// (m + ridge * I)^{-1} through an L D L^T factorization. `m` must be
/// symmetric positive semi-definite. Throws SingularMatrixError when the
/// factorization hits a non-positive pivot.
DenseMatrix ridge_inverse(const DenseMatrix& m, double ridge);

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
DenseMatrix& operator+=(DenseMatrix& a, const DenseMatrix& b);

/// alpha * a + beta * b.
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                 double beta = 1.0);
SparseMatrix scaled(const SparseMatrix& a, double s);

double frobenius_norm(const DenseMatrix& m);
double frobenius_norm(const SparseMatrix& m);

}  // namespace mtf
