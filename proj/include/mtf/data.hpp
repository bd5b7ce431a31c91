#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtf/labels.hpp"
#include "mtf/linalg.hpp"

namespace mtf {

/// Ordered type pair (h, l) with h < l.
using TypePair = std::pair<std::size_t, std::size_t>;

/// Input problem: m object types and their non-negative inter-type relations.
///
/// Each unordered pair is stored once as R_hl with h < l; asking for R_lh
/// returns the transpose, which is cached at insertion time.
class MultiAspectDataset {
 public:
  MultiAspectDataset() = default;
  explicit MultiAspectDataset(std::vector<std::size_t> sizes,
                              std::vector<std::string> names = {});

  /// Adds R_hl. When h > l the matrix is taken as R_hl and stored as its
  /// transpose under (l, h). Throws ContractViolation on a shape mismatch,
  /// a negative entry, h == l, or a pair that already has a relation.
  void add_relation(std::size_t h, std::size_t l, const SparseMatrix& r);
  void set_truth(std::size_t h, Labels labels);

  std::size_t type_count() const { return sizes_.size(); }
  std::size_t size(std::size_t h) const { return sizes_.at(h); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<std::string>& names() const { return names_; }

  bool has_relation(std::size_t h, std::size_t l) const;
  /// R_hl for any h != l with a stored relation.
  const SparseMatrix& relation(std::size_t h, std::size_t l) const;
  /// Stored pairs, ascending.
  std::vector<TypePair> pairs() const;

  bool has_truth(std::size_t h) const { return truth_.count(h) != 0; }
  const Labels& truth(std::size_t h) const { return truth_.at(h); }

  /// Throws ContractViolation if some type takes part in no relation.
  void check_complete() const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::string> names_;
  std::map<TypePair, SparseMatrix> relations_;
  std::map<TypePair, SparseMatrix> transposes_;
  std::map<std::size_t, Labels> truth_;
};

struct SyntheticSpec {
  std::vector<std::size_t> sizes;
  std::size_t clusters = 2;
  double block_strength = 1.0;
  double noise = 0.0;
  double sparsity = 0.0;
  std::uint64_t seed = 0;
};

/// Planted-partition generator. Each object gets a balanced, shuffled ground
/// truth cluster. Every pair h < l gets a relation whose entry (i, j) is zero
/// with probability `sparsity`, otherwise `block_strength` when the clusters
/// of i and j agree and `noise * U(0,1)` when they differ.
MultiAspectDataset generate_synthetic(const SyntheticSpec& spec);

class DataError : public std::runtime_error {
 public:
  enum class Kind { Io, Malformed, NegativeEntry, ShapeMismatch, DuplicatePair, LabelMismatch };

  DataError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// MatrixMarket coordinate real general, 1-based indices. Values are written
// in shortest round-trip form, so save/load is bit-exact.
SparseMatrix read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m);
/// MatrixMarket array format (column-major, as the format requires).
void write_matrix_market_dense(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_market_dense(const std::filesystem::path& path);

/// One non-negative integer per line.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);

/// Reads a JSON manifest:
///   { "m": 3, "types": ["doc", "term", "concept"],
///     "relations": { "0-1": "r_0_1.mtx", ... },
///     "labels": { "0": "labels_0.txt" } }
/// "m" and "types" are optional; m is inferred from relation keys and
/// sizes from the matrix shapes. Relative paths resolve against the
/// manifest's directory.
MultiAspectDataset load_dataset(const std::filesystem::path& manifest);

/// Writes manifest.json, one .mtx per relation and one label file per type
/// with truth into `dir`. Returns the manifest path.
std::filesystem::path save_dataset(const MultiAspectDataset& dataset,
                                   const std::filesystem::path& dir);

struct Finding {
  enum class Kind { IsolatedObject, UnrelatedType };
  Kind kind;
  std::size_t type;
  std::size_t index;  // object index for IsolatedObject
  TypePair relation;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  std::map<TypePair, double> density;
};

/// Non-fatal checks: objects with an all-zero row/column in a relation,
/// types in no relation, and nnz / (n_h * n_l) per relation.
ValidationReport validate(const MultiAspectDataset& dataset);

}  // namespace mtf
