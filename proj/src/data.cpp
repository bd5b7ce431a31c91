#include "mtf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mtf {

namespace fs = std::filesystem;

MultiAspectDataset::MultiAspectDataset(std::vector<std::size_t> sizes,
                                       std::vector<std::string> names)
    : sizes_(std::move(sizes)), names_(std::move(names)) {
  require(sizes_.size() >= 2, "dataset needs at least two object types");
  if (names_.empty())
    for (std::size_t h = 0; h < sizes_.size(); ++h) names_.push_back("type" + std::to_string(h));
  require(names_.size() == sizes_.size(), "dataset: one name per type required");
}

void MultiAspectDataset::add_relation(std::size_t h, std::size_t l, const SparseMatrix& r) {
  require(h != l, "relation must join two distinct types");
  require(h < type_count() && l < type_count(), "relation type index out of range");
  require(r.rows() == sizes_[h] && r.cols() == sizes_[l],
          "relation " + std::to_string(h) + "-" + std::to_string(l) + " has shape " +
              std::to_string(r.rows()) + "x" + std::to_string(r.cols()) + ", expected " +
              std::to_string(sizes_[h]) + "x" + std::to_string(sizes_[l]));
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (double v : r.row_values(i))
      require(v >= 0.0, "relation " + std::to_string(h) + "-" + std::to_string(l) +
                            " has a negative entry in row " + std::to_string(i));
  const TypePair key{std::min(h, l), std::max(h, l)};
  require(relations_.count(key) == 0, "duplicate relation for pair " +
                                          std::to_string(key.first) + "-" +
                                          std::to_string(key.second));
  // Re-wrap with the non-negativity flag set.
  SparseMatrix stored = SparseMatrix::from_triplets(r.rows(), r.cols(), r.triplets(), true);
  if (h > l) stored = stored.transposed();
  transposes_[key] = stored.transposed();
  relations_[key] = std::move(stored);
}

void MultiAspectDataset::set_truth(std::size_t h, Labels labels) {
  require(h < type_count(), "truth type index out of range");
  require(labels.size() == sizes_[h], "truth for type " + std::to_string(h) + " has " +
                                          std::to_string(labels.size()) + " labels, expected " +
                                          std::to_string(sizes_[h]));
  truth_[h] = std::move(labels);
}

bool MultiAspectDataset::has_relation(std::size_t h, std::size_t l) const {
  return h != l && relations_.count({std::min(h, l), std::max(h, l)}) != 0;
}

const SparseMatrix& MultiAspectDataset::relation(std::size_t h, std::size_t l) const {
  require(has_relation(h, l),
          "no relation between types " + std::to_string(h) + " and " + std::to_string(l));
  return h < l ? relations_.at({h, l}) : transposes_.at({l, h});
}

std::vector<TypePair> MultiAspectDataset::pairs() const {
  std::vector<TypePair> out;
  for (const auto& [key, _] : relations_) out.push_back(key);
  return out;
}

void MultiAspectDataset::check_complete() const {
  std::vector<bool> seen(type_count(), false);
  for (const auto& [key, _] : relations_) seen[key.first] = seen[key.second] = true;
  for (std::size_t h = 0; h < seen.size(); ++h)
    require(seen[h], "type " + std::to_string(h) + " takes part in no relation");
}

MultiAspectDataset generate_synthetic(const SyntheticSpec& spec) {
  require(spec.sizes.size() >= 2, "synthetic: need at least two types");
  require(spec.clusters >= 1, "synthetic: need at least one cluster");
  require(spec.block_strength > 0.0 && spec.block_strength <= 1.0,
          "synthetic: block strength must lie in (0, 1]");
  require(spec.noise >= 0.0 && spec.noise < 1.0, "synthetic: noise must lie in [0, 1)");
  require(spec.sparsity >= 0.0 && spec.sparsity < 1.0, "synthetic: sparsity must lie in [0, 1)");
  for (std::size_t n : spec.sizes)
    require(n >= spec.clusters, "synthetic: every type needs at least one object per cluster");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MultiAspectDataset ds(spec.sizes);
  std::vector<Labels> truth;
  for (std::size_t h = 0; h < spec.sizes.size(); ++h) {
    Labels labels(spec.sizes[h]);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % spec.clusters;
    std::shuffle(labels.begin(), labels.end(), rng);
    truth.push_back(labels);
  }

  for (std::size_t h = 0; h < spec.sizes.size(); ++h) {
    for (std::size_t l = h + 1; l < spec.sizes.size(); ++l) {
      std::vector<Triplet> entries;
      for (std::size_t i = 0; i < spec.sizes[h]; ++i) {
        for (std::size_t j = 0; j < spec.sizes[l]; ++j) {
          const double keep = unit(rng);
          const double magnitude = unit(rng);
          if (keep < spec.sparsity) continue;
          const double v = truth[h][i] == truth[l][j] ? spec.block_strength
                                                      : spec.noise * magnitude;
          if (v > 0.0) entries.push_back({i, j, v});
        }
      }
      ds.add_relation(h, l,
                      SparseMatrix::from_triplets(spec.sizes[h], spec.sizes[l],
                                                  std::move(entries), true));
    }
  }
  for (std::size_t h = 0; h < truth.size(); ++h) ds.set_truth(h, std::move(truth[h]));
  return ds;
}

namespace {

std::string context(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::Io, "cannot write " + path.string());
  return out;
}

struct MatrixMarketHeader {
  bool coordinate = true;
  std::size_t line = 0;
};

MatrixMarketHeader read_banner(std::istream& in, const fs::path& path, std::string& line) {
  MatrixMarketHeader header;
  if (!std::getline(in, line))
    throw DataError(DataError::Kind::Malformed, context(path, 1) + "empty file");
  header.line = 1;
  std::string lower = line;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto tokens = split_ws(lower);
  if (tokens.size() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" ||
      (tokens[2] != "coordinate" && tokens[2] != "array") ||
      (tokens[3] != "real" && tokens[3] != "integer") || tokens[4] != "general")
    throw DataError(DataError::Kind::Malformed,
                    context(path, 1) + "unsupported MatrixMarket banner '" + line + "'");
  header.coordinate = tokens[2] == "coordinate";
  // Skip comments up to the size line.
  while (std::getline(in, line)) {
    ++header.line;
    if (line.empty() || line[0] == '%') continue;
    return header;
  }
  throw DataError(DataError::Kind::Malformed, context(path, header.line) + "missing size line");
}

}  // namespace

SparseMatrix read_matrix_market(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  auto header = read_banner(in, path, line);
  if (!header.coordinate)
    throw DataError(DataError::Kind::Malformed,
                    context(path, 1) + "expected coordinate format for a relation");
  std::size_t rows = 0, cols = 0, count = 0;
  {
    const auto tokens = split_ws(line);
    if (tokens.size() != 3 || !parse_number(tokens[0], rows) || !parse_number(tokens[1], cols) ||
        !parse_number(tokens[2], count))
      throw DataError(DataError::Kind::Malformed, context(path, header.line) + "bad size line");
  }

  std::vector<Triplet> entries;
  entries.reserve(count);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::size_t lineno = header.line;
  while (entries.size() < count && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    const auto tokens = split_ws(line);
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (tokens.size() != 3 || !parse_number(tokens[0], i) || !parse_number(tokens[1], j) ||
        !parse_number(tokens[2], v))
      throw DataError(DataError::Kind::Malformed,
                      context(path, lineno) + "expected 'row col value', got '" + line + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw DataError(DataError::Kind::ShapeMismatch,
                      context(path, lineno) + "index (" + std::to_string(i) + "," +
                          std::to_string(j) + ") outside " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    if (!std::isfinite(v))
      throw DataError(DataError::Kind::Malformed, context(path, lineno) + "non-finite value");
    if (v < 0.0)
      throw DataError(DataError::Kind::NegativeEntry,
                      context(path, lineno) + "negative entry " + format_double(v) + " at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
    if (!seen.insert({i, j}).second)
      throw DataError(DataError::Kind::Malformed,
                      context(path, lineno) + "repeated entry (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
    entries.push_back({i - 1, j - 1, v});
  }
  if (entries.size() != count)
    throw DataError(DataError::Kind::Malformed,
                    context(path, lineno) + "expected " + std::to_string(count) +
                        " entries, found " + std::to_string(entries.size()));
  return SparseMatrix::from_triplets(rows, cols, std::move(entries), true);
}

void write_matrix_market(const fs::path& path, const SparseMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (const auto& t : m.triplets())
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << format_double(t.value) << '\n';
}

void write_matrix_market_dense(const fs::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
}

DenseMatrix read_matrix_market_dense(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  auto header = read_banner(in, path, line);
  if (header.coordinate) {
    // A coordinate file is accepted here too and densified.
    in.close();
    auto s = read_matrix_market(path);
    return s.to_dense();
  }
  std::size_t rows = 0, cols = 0;
  const auto tokens = split_ws(line);
  if (tokens.size() != 2 || !parse_number(tokens[0], rows) || !parse_number(tokens[1], cols))
    throw DataError(DataError::Kind::Malformed, context(path, header.line) + "bad size line");
  DenseMatrix m(rows, cols);
  std::size_t lineno = header.line;
  for (std::size_t k = 0; k < rows * cols; ++k) {
    if (!std::getline(in, line))
      throw DataError(DataError::Kind::Malformed, context(path, lineno) + "truncated array");
    ++lineno;
    double v = 0.0;
    const auto t = split_ws(line);
    if (t.size() != 1 || !parse_number(t[0], v))
      throw DataError(DataError::Kind::Malformed, context(path, lineno) + "bad value");
    m(k % rows, k / rows) = v;
  }
  return m;
}

Labels read_labels(const fs::path& path) {
  auto in = open_in(path);
  Labels labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    std::size_t v = 0;
    if (tokens.size() != 1 || !parse_number(tokens[0], v))
      throw DataError(DataError::Kind::Malformed,
                      context(path, lineno) + "expected a non-negative integer label");
    labels.push_back(v);
  }
  return labels;
}

void write_labels(const fs::path& path, const Labels& labels) {
  auto out = open_out(path);
  for (std::size_t v : labels) out << v << '\n';
}

namespace {

TypePair parse_pair_key(const std::string& key, const fs::path& manifest) {
  const auto dash = key.find('-');
  std::size_t h = 0, l = 0;
  if (dash == std::string::npos ||
      !parse_number(std::string_view(key).substr(0, dash), h) ||
      !parse_number(std::string_view(key).substr(dash + 1), l) || h == l)
    throw DataError(DataError::Kind::Malformed,
                    manifest.string() + ": bad relation key '" + key + "' (expected \"h-l\")");
  return {h, l};
}

}  // namespace

MultiAspectDataset load_dataset(const fs::path& manifest) {
  auto in = open_in(manifest);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(DataError::Kind::Malformed, manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("relations") || !doc["relations"].is_object())
    throw DataError(DataError::Kind::Malformed,
                    manifest.string() + ": manifest needs a \"relations\" object");
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  struct Loaded {
    TypePair key;
    std::size_t h, l;
    SparseMatrix matrix;
    std::string file;
  };
  std::vector<Loaded> loaded;
  std::set<TypePair> keys;
  std::size_t m = 0;
  for (const auto& [key, value] : doc["relations"].items()) {
    if (!value.is_string())
      throw DataError(DataError::Kind::Malformed,
                      manifest.string() + ": relation '" + key + "' must name a file");
    const auto [h, l] = parse_pair_key(key, manifest);
    const TypePair canon{std::min(h, l), std::max(h, l)};
    if (!keys.insert(canon).second)
      throw DataError(DataError::Kind::DuplicatePair,
                      manifest.string() + ": duplicate relation for pair " +
                          std::to_string(canon.first) + "-" + std::to_string(canon.second));
    const auto file = resolve(value.get<std::string>());
    loaded.push_back({canon, h, l, read_matrix_market(file), file.string()});
    m = std::max({m, h + 1, l + 1});
  }
  if (doc.contains("m")) {
    const auto declared = doc["m"].get<std::size_t>();
    if (declared < m)
      throw DataError(DataError::Kind::ShapeMismatch,
                      manifest.string() + ": m=" + std::to_string(declared) +
                          " but relations reference type " + std::to_string(m - 1));
    m = declared;
  }

  std::vector<std::optional<std::size_t>> sizes(m);
  auto set_size = [&](std::size_t t, std::size_t n, const std::string& file) {
    if (sizes[t] && *sizes[t] != n)
      throw DataError(DataError::Kind::ShapeMismatch,
                      file + ": type " + std::to_string(t) + " has " + std::to_string(n) +
                          " objects here but " + std::to_string(*sizes[t]) + " elsewhere");
    sizes[t] = n;
  };
  for (const auto& r : loaded) {
    set_size(r.h, r.matrix.rows(), r.file);
    set_size(r.l, r.matrix.cols(), r.file);
  }
  std::vector<std::size_t> resolved;
  for (std::size_t t = 0; t < m; ++t) {
    if (!sizes[t])
      throw DataError(DataError::Kind::ShapeMismatch,
                      manifest.string() + ": type " + std::to_string(t) + " has no relation");
    resolved.push_back(*sizes[t]);
  }
  std::vector<std::string> names;
  if (doc.contains("types")) {
    names = doc["types"].get<std::vector<std::string>>();
    if (names.size() != m)
      throw DataError(DataError::Kind::ShapeMismatch,
                      manifest.string() + ": " + std::to_string(names.size()) +
                          " type names for " + std::to_string(m) + " types");
  }

  MultiAspectDataset ds(resolved, names);
  for (auto& r : loaded) ds.add_relation(r.h, r.l, r.matrix);

  if (doc.contains("labels")) {
    for (const auto& [key, value] : doc["labels"].items()) {
      std::size_t h = 0;
      if (!parse_number(std::string_view(key), h) || h >= m)
        throw DataError(DataError::Kind::Malformed,
                        manifest.string() + ": bad label type key '" + key + "'");
      const auto file = resolve(value.get<std::string>());
      auto labels = read_labels(file);
      if (labels.size() != resolved[h])
        throw DataError(DataError::Kind::LabelMismatch,
                        file.string() + ": " + std::to_string(labels.size()) +
                            " labels for type " + std::to_string(h) + " with " +
                            std::to_string(resolved[h]) + " objects");
      ds.set_truth(h, std::move(labels));
    }
  }
  return ds;
}

fs::path save_dataset(const MultiAspectDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json doc;
  doc["m"] = dataset.type_count();
  doc["types"] = dataset.names();
  doc["relations"] = nlohmann::ordered_json::object();
  for (const auto& [h, l] : dataset.pairs()) {
    const std::string file = "r_" + std::to_string(h) + "_" + std::to_string(l) + ".mtx";
    write_matrix_market(dir / file, dataset.relation(h, l));
    doc["relations"][std::to_string(h) + "-" + std::to_string(l)] = file;
  }
  bool any_truth = false;
  for (std::size_t h = 0; h < dataset.type_count(); ++h) {
    if (!dataset.has_truth(h)) continue;
    const std::string file = "labels_" + std::to_string(h) + ".txt";
    write_labels(dir / file, dataset.truth(h));
    doc["labels"][std::to_string(h)] = file;
    any_truth = true;
  }
  if (!any_truth) doc["labels"] = nlohmann::ordered_json::object();
  const auto manifest = dir / "manifest.json";
  auto out = open_out(manifest);
  out << doc.dump(2) << '\n';
  return manifest;
}

ValidationReport validate(const MultiAspectDataset& dataset) {
  ValidationReport report;
  std::vector<bool> related(dataset.type_count(), false);
  for (const auto& [h, l] : dataset.pairs()) {
    related[h] = related[l] = true;
    const auto& r = dataset.relation(h, l);
    report.density[{h, l}] =
        static_cast<double>(r.nnz()) / (static_cast<double>(r.rows()) * static_cast<double>(r.cols()));
    const auto rows = row_sums(r);
    const auto cols = col_sums(r);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i] == 0.0)
        report.findings.push_back({Finding::Kind::IsolatedObject, h, i, {h, l},
                                   "isolated object: type " + std::to_string(h) + " index " +
                                       std::to_string(i) + " has no entries in relation " +
                                       std::to_string(h) + "-" + std::to_string(l)});
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (cols[j] == 0.0)
        report.findings.push_back({Finding::Kind::IsolatedObject, l, j, {h, l},
                                   "isolated object: type " + std::to_string(l) + " index " +
                                       std::to_string(j) + " has no entries in relation " +
                                       std::to_string(h) + "-" + std::to_string(l)});
  }
  for (std::size_t h = 0; h < related.size(); ++h)
    if (!related[h])
      report.findings.push_back({Finding::Kind::UnrelatedType, h, 0, {h, h},
                                 "type " + std::to_string(h) + " takes part in no relation"});
  return report;
}

}  // namespace mtf
