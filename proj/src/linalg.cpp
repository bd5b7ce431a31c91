#include "mtf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mtf/parallel.hpp"

namespace mtf {

namespace {

std::string shape(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows * cols,
          "DenseMatrix: " + std::to_string(values_.size()) + " values for shape " +
              shape(rows, cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, "DenseMatrix::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(values));
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries, bool nonnegative) {
  for (const auto& t : entries) {
    require(t.row < rows && t.col < cols,
            "SparseMatrix: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                ") outside " + shape(rows, cols));
    require(std::isfinite(t.value), "SparseMatrix: non-finite value");
    require(!nonnegative || t.value >= 0.0,
            "SparseMatrix: negative value at (" + std::to_string(t.row) + "," +
                std::to_string(t.col) + ")");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    require(entries[k].row != entries[k - 1].row || entries[k].col != entries[k - 1].col,
            "SparseMatrix: duplicate entry (" + std::to_string(entries[k].row) + "," +
                std::to_string(entries[k].col) + ")");
  }

  SparseMatrix m(rows, cols);
  m.nonnegative_ = nonnegative;
  for (const auto& t : entries) {
    if (t.value == 0.0) continue;
    m.row_ptr_[t.row + 1]++;
    m.col_idx_.push_back(t.col);
    m.values_.push_back(t.value);
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
  return m;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d, bool nonnegative) {
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) entries.push_back({i, j, d(i, j)});
  return from_triplets(d.rows(), d.cols(), std::move(entries), nonnegative);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  require(i < rows_ && j < cols_, "SparseMatrix::at: index out of range");
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto cols = row_cols(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out.push_back({i, cols[k], vals[k]});
  }
  return out;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto cols = row_cols(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) d(i, cols[k]) = vals[k];
  }
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t(cols_, rows_);
  t.nonnegative_ = nonnegative_;
  for (std::size_t c : col_idx_) t.row_ptr_[c + 1]++;
  std::partial_sum(t.row_ptr_.begin(), t.row_ptr_.end(), t.row_ptr_.begin());
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  // Walking source rows in order keeps each transposed row sorted by column.
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t dst = next[col_idx_[k]]++;
      t.col_idx_[dst] = i;
      t.values_[dst] = values_[k];
    }
  }
  return t;
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  const SparseMatrix t = transposed();
  return t.row_ptr_ == row_ptr_ && t.col_idx_ == col_idx_ && t.values_ == values_;
}

SparseMatrix DiagMatrix::to_sparse() const {
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < size(); ++i) entries.push_back({i, i, diagonal_[i]});
  return SparseMatrix::from_triplets(size(), size(), std::move(entries));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(),
          "matmul: " + shape(a.rows(), a.cols()) + " by " + shape(b.rows(), b.cols()));
  DenseMatrix out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(),
          "matmul: " + shape(a.rows(), a.cols()) + " by " + shape(b.rows(), b.cols()));
  DenseMatrix out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(dynamic, 16) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto src = b.row(cols[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += vals[k] * src[j];
    }
  }
  return out;
}

DenseMatrix matmul(const DiagMatrix& a, const DenseMatrix& b) {
  require(a.size() == b.rows(), "matmul: diagonal size does not match rows");
  DenseMatrix out = b;
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (double& v : out.row(i)) v *= a(i);
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(),
          "matmul_tn: " + shape(a.rows(), a.cols()) + "^T by " + shape(b.rows(), b.cols()));
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ar = a.row(k);
    const auto br = b.row(k);
    for (std::size_t i = 0; i < ar.size(); ++i) {
      if (ar[i] == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < br.size(); ++j) dst[j] += ar[i] * br[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.cols(),
          "matmul_nt: " + shape(a.rows(), a.cols()) + " by " + shape(b.rows(), b.cols()) + "^T");
  DenseMatrix out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(parallel::thread_count())
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

SignSplit<DenseMatrix> pos_neg_split(const DenseMatrix& m) {
  SignSplit<DenseMatrix> s{DenseMatrix(m.rows(), m.cols()), DenseMatrix(m.rows(), m.cols())};
  const auto src = m.values();
  auto plus = s.plus.values();
  auto minus = s.minus.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    plus[k] = (std::abs(src[k]) + src[k]) / 2.0;
    minus[k] = (std::abs(src[k]) - src[k]) / 2.0;
  }
  return s;
}

SignSplit<SparseMatrix> pos_neg_split(const SparseMatrix& m) {
  std::vector<Triplet> plus;
  std::vector<Triplet> minus;
  for (const auto& t : m.triplets()) {
    if (t.value > 0.0)
      plus.push_back(t);
    else
      minus.push_back({t.row, t.col, -t.value});
  }
  return {SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(plus), true),
          SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(minus), true)};
}

std::vector<double> row_sums(const DenseMatrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double v : m.row(i)) out[i] += v;
  return out;
}

std::vector<double> col_sums(const DenseMatrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

std::vector<double> row_sums(const SparseMatrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double v : m.row_values(i)) out[i] += v;
  return out;
}

std::vector<double> col_sums(const SparseMatrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto cols = m.row_cols(i);
    const auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k];
  }
  return out;
}

double trace_product(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "trace_product: " + shape(a.rows(), a.cols()) + " vs " + shape(b.rows(), b.cols()));
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s;
}

DenseMatrix ridge_inverse(const DenseMatrix& m, double ridge) {
  require(m.rows() == m.cols(), "ridge_inverse: matrix not square");
  require(ridge >= 0.0, "ridge_inverse: negative ridge");
  const std::size_t n = m.rows();

  // Square-root-free Cholesky (L D L^T) of m + ridge*I, so diagonal inputs
  // invert exactly.
  DenseMatrix l = DenseMatrix::identity(n);
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j) + ridge;
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k) * d[k];
    if (!(pivot > 0.0) || !std::isfinite(pivot))
      throw SingularMatrixError("ridge_inverse: non-positive pivot at column " +
                                std::to_string(j));
    d[j] = pivot;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k) * d[k];
      l(i, j) = s / pivot;
    }
  }

  // Solve L D L^T X = I column by column.
  DenseMatrix inv(n, n);
  std::vector<double> y(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = i == c ? 1.0 : 0.0;
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii] / d[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * inv(k, c);
      inv(ii, c) = s;
    }
  }
  // Symmetrize to remove round-off asymmetry.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  if (!inv.all_finite()) throw SingularMatrixError("ridge_inverse: non-finite inverse");
  return inv;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  out += b;
  return out;
}

DenseMatrix& operator+=(DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix add: shape mismatch");
  auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) av[k] += bv[k];
  return a;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix subtract: shape mismatch");
  DenseMatrix out = a;
  auto ov = out.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < ov.size(); ++k) ov[k] -= bv[k];
  return out;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sparse add: shape mismatch");
  std::vector<Triplet> entries;
  entries.reserve(a.nnz() + b.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ac = a.row_cols(i);
    const auto av = a.row_values(i);
    const auto bc = b.row_cols(i);
    const auto bv = b.row_values(i);
    std::size_t p = 0, q = 0;
    while (p < ac.size() || q < bc.size()) {
      if (q == bc.size() || (p < ac.size() && ac[p] < bc[q])) {
        entries.push_back({i, ac[p], alpha * av[p]});
        ++p;
      } else if (p == ac.size() || bc[q] < ac[p]) {
        entries.push_back({i, bc[q], beta * bv[q]});
        ++q;
      } else {
        entries.push_back({i, ac[p], alpha * av[p] + beta * bv[q]});
        ++p;
        ++q;
      }
    }
  }
  const bool nonneg = a.nonnegative() && b.nonnegative() && alpha >= 0.0 && beta >= 0.0;
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(entries), nonneg);
}

SparseMatrix scaled(const SparseMatrix& a, double s) {
  auto entries = a.triplets();
  for (auto& t : entries) t.value *= s;
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(entries),
                                     a.nonnegative() && s >= 0.0);
}

double frobenius_norm(const DenseMatrix& m) { return std::sqrt(trace_product(m, m)); }

double frobenius_norm(const SparseMatrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double v : m.row_values(i)) s += v * v;
  return std::sqrt(s);
}

}  // namespace mtf
