#include "mtf/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mtf/graphs.hpp"
#include "mtf/parallel.hpp"
#include "mtf/seed.hpp"

namespace mtf::commands {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw DataError(DataError::Kind::Io, "write failed: " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(),
          "not a number: '" + text + "'");
  return v;
}

}  // namespace

fs::path synth(SyntheticSpec spec, const fs::path& out) {
  spec.seed = derive_seed(spec.seed, SeedStream::Generator);
  return save_dataset(generate_synthetic(spec), out);
}

double resolve_delta(double lambda, std::optional<double> delta, std::optional<double> ratio) {
  if (delta) return *delta;
  return ratio.value_or(kDefaultDeltaRatio) * lambda;
}

std::map<std::size_t, MetricReport> evaluate_types(const MultiAspectDataset& dataset,
                                                   const std::vector<Labels>& labels) {
  std::map<std::size_t, MetricReport> out;
  for (std::size_t h = 0; h < dataset.type_count(); ++h) {
    if (!dataset.has_truth(h)) continue;
    const DenseMatrix features = type_feature_rows(dataset, h);
    out[h] = evaluate(labels.at(h), dataset.truth(h), &features);
  }
  return out;
}

ClusterResult cluster(const MultiAspectDataset& dataset, const SolverConfig& config) {
  ClusterResult result;
  result.report = solve(dataset, config);
  result.labels = extract_labels(result.report.state, config);
  result.metrics = evaluate_types(dataset, result.labels);
  return result;
}

std::string trace_csv(const std::vector<ObjectiveBreakdown>& trace) {
  std::string out = "iter,reconstruction,intra,inter,total\n";
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& b = trace[t];
    out += std::to_string(t) + "," + num(b.reconstruction) + "," + num(b.intra) + "," +
           num(b.inter) + "," + num(b.total) + "\n";
  }
  return out;
}

std::string cluster_summary(const MultiAspectDataset& dataset, const ClusterResult& result) {
  std::ostringstream out;
  const auto& last = result.report.trace.back();
  out << "iterations=" << result.report.iterations
      << " converged=" << (result.report.converged ? "true" : "false") << "\n";
  out << "objective reconstruction=" << num(last.reconstruction) << " intra=" << num(last.intra)
      << " inter=" << num(last.inter) << " total=" << num(last.total) << "\n";
  for (const auto& [h, m] : result.metrics) {
    out << "type " << h;
    if (h < dataset.names().size() && !dataset.names()[h].empty()) out << " (" << dataset.names()[h] << ")";
    out << ": nmi=" << fixed(m.nmi, 4) << " ac=" << fixed(m.accuracy, 4)
        << " cohesiveness=" << fixed(m.cohesiveness, 4) << "\n";
  }
  return out.str();
}

std::string config_to_json(const SolverConfig& config, const fs::path& manifest) {
  json j;
  j["manifest"] = fs::absolute(manifest).lexically_normal().string();
  j["clusters"] = config.clusters;
  j["lambda"] = config.lambda;
  j["delta"] = config.delta;
  j["k"] = config.k;
  j["p"] = config.p;
  j["max_iters"] = config.max_iters;
  j["rel_tol"] = config.rel_tol;
  j["zero_floor"] = config.zero_floor;
  j["smoothing"] = config.smoothing;
  j["ridge_scale"] = config.ridge_scale;
  j["max_backtracks"] = config.max_backtracks;
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

SolverConfig config_from_json(const fs::path& path, fs::path* manifest) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::Malformed, path.string() + ": " + e.what());
  }
  SolverConfig c;
  try {
    c.clusters = j.value("clusters", c.clusters);
    c.lambda = j.value("lambda", c.lambda);
    c.delta = j.value("delta", c.delta);
    c.k = j.value("k", c.k);
    c.p = j.value("p", c.p);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.rel_tol = j.value("rel_tol", c.rel_tol);
    c.zero_floor = j.value("zero_floor", c.zero_floor);
    c.smoothing = j.value("smoothing", c.smoothing);
    c.ridge_scale = j.value("ridge_scale", c.ridge_scale);
    c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
    c.seed = j.value("seed", c.seed);
    if (manifest && j.contains("manifest")) *manifest = j.at("manifest").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::Malformed, path.string() + ": " + e.what());
  }
  return c;
}

void write_cluster_artifacts(const fs::path& out, const SolverConfig& config, const fs::path& manifest,
                             const ClusterResult& result, bool dump_factors) {
  fs::create_directories(out);
  write_text(out / "config.json", config_to_json(config, manifest));
  for (std::size_t h = 0; h < result.labels.size(); ++h)
    write_labels(out / ("labels_" + std::to_string(h) + ".txt"), result.labels[h]);
  write_text(out / "trace.csv", trace_csv(result.report.trace));
  if (!result.metrics.empty()) {
    std::string text = "type," + MetricReport::csv_header() + "\n";
    for (const auto& [h, m] : result.metrics) text += std::to_string(h) + "," + m.to_csv_row() + "\n";
    write_text(out / "metrics.csv", text);
  }
  if (dump_factors) {
    for (std::size_t h = 0; h < result.report.state.G.size(); ++h)
      write_matrix_market_dense(out / ("g_" + std::to_string(h) + ".mtx"),
                                result.report.state.G[h]);
    for (const auto& [key, s] : result.report.state.S)
      write_matrix_market_dense(
          out / ("s_" + std::to_string(key.first) + "_" + std::to_string(key.second) + ".mtx"), s);
  }
}

MetricReport evaluate(const Labels& pred, const Labels& truth, const DenseMatrix* data) {
  if (pred.size() != truth.size())
    throw DataError(DataError::Kind::LabelMismatch,
                    "predicted labels have " + std::to_string(pred.size()) +
                        " entries, true labels " + std::to_string(truth.size()));
  if (pred.empty()) throw DataError(DataError::Kind::LabelMismatch, "empty label files");
  MetricReport r;
  r.nmi = nmi(pred, truth);
  r.accuracy = matched_accuracy(pred, truth);
  r.cohesiveness = std::numeric_limits<double>::quiet_NaN();
  if (data) {
    if (data->rows() != pred.size())
      throw DataError(DataError::Kind::ShapeMismatch,
                      "data has " + std::to_string(data->rows()) + " rows for " +
                          std::to_string(pred.size()) + " labels");
    r.cohesiveness = solution_cohesiveness(pred, *data);
  }
  return r;
}

void append_metric_csv(const fs::path& path, const std::string& label, const MetricReport& report) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw DataError(DataError::Kind::Io, "cannot append to " + path.string());
  if (fresh) out << "run," << MetricReport::csv_header() << "\n";
  out << label << "," << report.to_csv_row() << "\n";
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find(':') != std::string::npos) {
      std::stringstream rs(item);
      std::string a, b, c;
      std::getline(rs, a, ':');
      std::getline(rs, b, ':');
      std::getline(rs, c, ':');
      const double start = parse_double(a), stop = parse_double(b);
      const double step = c.empty() ? 1.0 : parse_double(c);
      require(step > 0.0, "range step must be positive: '" + item + "'");
      require(stop >= start, "range end below start: '" + item + "'");
      const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
      for (std::size_t i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
    } else {
      out.push_back(parse_double(item));
    }
  }
  require(!out.empty(), "empty list");
  return out;
}

std::vector<std::uint64_t> parse_index_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (double v : parse_real_list(text)) {
    require(v >= 0.0 && v == std::floor(v), "expected non-negative integers: '" + text + "'");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

namespace {

struct Cell {
  double lambda;
  double ratio;
  std::size_t p;
  std::uint64_t seed;
};

bool row_before(const SweepRow& a, const SweepRow& b) {
  if (a.lambda != b.lambda) return a.lambda < b.lambda;
  if (a.delta_ratio != b.delta_ratio) return a.delta_ratio < b.delta_ratio;
  if (a.p != b.p) return a.p < b.p;
  if (a.type != b.type) return a.type < b.type;
  if (a.seed.has_value() != b.seed.has_value()) return a.seed.has_value();
  return a.seed.value_or(0) < b.seed.value_or(0);
}

std::vector<SweepRow> run_cell(const MultiAspectDataset& dataset, const SolverConfig& base,
                               const Cell& cell, const std::vector<std::size_t>& types) {
  SolverConfig config = base;
  config.lambda = cell.lambda;
  config.delta = cell.ratio * cell.lambda;
  config.p = cell.p;
  config.seed = cell.seed;
  std::vector<SweepRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const ClusterResult result = cluster(dataset, config);
    for (std::size_t h : types) {
      SweepRow row{cell.lambda, cell.ratio, cell.p, cell.seed, h, nan, nan,
                   static_cast<double>(result.report.iterations),
                   result.report.trace.back().total, false};
      if (dataset.has_truth(h)) {
        row.nmi = nmi(result.labels[h], dataset.truth(h));
        row.ac = matched_accuracy(result.labels[h], dataset.truth(h));
      }
      rows.push_back(row);
    }
  } catch (const std::exception&) {
    for (std::size_t h : types)
      rows.push_back({cell.lambda, cell.ratio, cell.p, cell.seed, h, nan, nan, nan, nan, true});
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep(const MultiAspectDataset& dataset, const SolverConfig& base,
                            const SweepGrid& grid, int workers) {
  require(!grid.lambdas.empty() && !grid.delta_ratios.empty() && !grid.ps.empty() &&
              !grid.seeds.empty(),
          "sweep: every grid axis needs at least one value");
  std::vector<std::size_t> types;
  if (grid.eval_type) {
    require(*grid.eval_type < dataset.type_count(), "sweep: --eval-type out of range");
    types.push_back(*grid.eval_type);
  } else {
    for (std::size_t h = 0; h < dataset.type_count(); ++h) types.push_back(h);
  }

  std::vector<Cell> cells;
  for (double lambda : grid.lambdas)
    for (double ratio : grid.delta_ratios)
      for (std::size_t p : grid.ps)
        for (std::uint64_t seed : grid.seeds) cells.push_back({lambda, ratio, p, seed});

  std::vector<SweepRow> rows;
  std::mutex rows_mutex;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto cell_rows = run_cell(dataset, base, cells[i], types);
      std::lock_guard lock(rows_mutex);
      rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    }
  };

  const auto n_workers =
      static_cast<std::size_t>(std::clamp<int>(workers, 1, static_cast<int>(cells.size())));
  if (n_workers == 1) {
    work();
  } else {
    // Cells already run side by side, so the kernels inside each stay serial.
    const int saved = parallel::thread_count();
    parallel::set_thread_count(1);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    parallel::set_thread_count(saved);
  }

  // Means over seeds; a failed cell poisons the mean with NaN.
  std::map<std::tuple<double, double, std::size_t, std::size_t>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.lambda, r.delta_ratio, r.p, r.type}].push_back(&r);
  std::vector<SweepRow> means;
  for (const auto& [key, members] : groups) {
    SweepRow m{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::nullopt, std::get<3>(key)};
    for (const SweepRow* r : members) {
      m.nmi += r->nmi;
      m.ac += r->ac;
      m.iters += r->iters;
      m.total_obj += r->total_obj;
      m.failed = m.failed || r->failed;
    }
    const auto n = static_cast<double>(members.size());
    m.nmi /= n;
    m.ac /= n;
    m.iters /= n;
    m.total_obj /= n;
    means.push_back(m);
  }
  rows.insert(rows.end(), means.begin(), means.end());
  std::sort(rows.begin(), rows.end(), row_before);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,delta_ratio,p,seed,type,nmi,ac,iters,total_obj\n";
  for (const auto& r : rows) {
    out += num(r.lambda) + "," + num(r.delta_ratio) + "," + std::to_string(r.p) + "," +
           (r.seed ? std::to_string(*r.seed) : std::string("mean")) + "," +
           std::to_string(r.type) + "," + fixed(r.nmi) + "," + fixed(r.ac) + "," +
           (r.seed ? (std::isnan(r.iters) ? std::string("nan") : std::to_string(static_cast<std::size_t>(r.iters)))
                   : fixed(r.iters, 2)) +
           "," + num(r.total_obj) + "\n";
  }
  return out;
}

std::size_t estimate_memory(const MultiAspectDataset& dataset, const GraphSet& graphs,
                            std::size_t clusters) {
  // CSR: one value and one column index per entry plus row offsets.
  auto sparse_bytes = [](const SparseMatrix& m) {
    return m.nnz() * (sizeof(double) + sizeof(std::size_t)) + (m.rows() + 1) * sizeof(std::size_t);
  };
  std::size_t bytes = 0;
  std::size_t widest = 0;
  for (const auto& [h, l] : dataset.pairs()) bytes += 2 * sparse_bytes(dataset.relation(h, l));
  for (std::size_t h = 0; h < dataset.type_count(); ++h) {
    std::size_t width = 0;
    for (std::size_t l = 0; l < dataset.type_count(); ++l)
      if (dataset.has_relation(h, l)) width += dataset.size(l);
    widest = std::max(widest, dataset.size(h) * width);
    // G, its update buffers and the K-means copy.
    bytes += 4 * dataset.size(h) * clusters * sizeof(double);
  }
  bytes += widest * sizeof(double);  // dense features for the kNN graph
  for (const auto& g : graphs.intra) bytes += sparse_bytes(g.weights) + sparse_bytes(g.laplacian);
  for (const auto& [key, g] : graphs.inter) bytes += sparse_bytes(g.affinity);
  for (const auto& q : graphs.aggregates.regularizer) bytes += sparse_bytes(q);
  for (const auto& [key, q] : graphs.aggregates.coupling) bytes += 2 * sparse_bytes(q);
  return bytes;
}

std::vector<ScaleRow> scale(const ScaleOptions& options, const SolverConfig& config) {
  require(!options.schedule.empty(), "scale: empty schedule");
  require(options.repeats >= 1, "scale: repeats must be at least 1");
  if (options.grow_type)
    require(*options.grow_type < options.base.sizes.size(), "scale: grow type out of range");

  std::vector<ScaleRow> rows;
  for (std::size_t mult : options.schedule) {
    require(mult >= 1, "scale: multipliers must be at least 1");
    SyntheticSpec spec = options.base;
    for (std::size_t h = 0; h < spec.sizes.size(); ++h)
      if (!options.grow_type || *options.grow_type == h) spec.sizes[h] *= mult;
    spec.seed = derive_seed(options.base.seed, SeedStream::Generator, mult);
    const MultiAspectDataset dataset = generate_synthetic(spec);

    SolverConfig run = config;
    run.max_iters = options.iterations;
    run.rel_tol = std::numeric_limits<double>::min();  // run the full iteration budget

    ScaleRow row;
    row.multiplier = mult;
    row.sizes = spec.sizes;
    row.graph_seconds = row.init_seconds = row.solve_seconds = std::numeric_limits<double>::infinity();
    for (std::size_t rep = 0; rep < options.repeats; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      const GraphSet graphs = build_graphs(dataset, run.k, run.p, run.lambda, run.delta);
      row.graph_seconds = std::min(row.graph_seconds, seconds_since(t0));

      t0 = std::chrono::steady_clock::now();
      FactorState initial = init_factors(dataset, run);
      row.init_seconds = std::min(row.init_seconds, seconds_since(t0));

      t0 = std::chrono::steady_clock::now();
      const SolveReport report = solve_from(dataset, run, graphs, std::move(initial));
      row.solve_seconds = std::min(row.solve_seconds, seconds_since(t0));
      row.iterations = report.iterations;
      if (rep == 0) row.memory_bytes = estimate_memory(dataset, graphs, run.clusters);
    }
    row.per_iter_seconds =
        row.solve_seconds / static_cast<double>(std::max<std::size_t>(row.iterations, 1));
    rows.push_back(row);
  }
  return rows;
}

std::string scale_csv(const std::vector<ScaleRow>& rows) {
  std::string out =
      "multiplier,sizes,graph_seconds,init_seconds,solve_seconds,per_iter_seconds,iterations,"
      "memory_bytes\n";
  for (const auto& r : rows) {
    std::string sizes;
    for (std::size_t h = 0; h < r.sizes.size(); ++h)
      sizes += (h ? "x" : "") + std::to_string(r.sizes[h]);
    out += std::to_string(r.multiplier) + "," + sizes + "," + num(r.graph_seconds) + "," +
           num(r.init_seconds) + "," + num(r.solve_seconds) + "," + num(r.per_iter_seconds) +
           "," + std::to_string(r.iterations) + "," + std::to_string(r.memory_bytes) + "\n";
  }
  return out;
}

void dump_graphs(const fs::path& out, const GraphSet& graphs) {
  fs::create_directories(out);
  for (std::size_t h = 0; h < graphs.intra.size(); ++h) {
    const auto id = std::to_string(h);
    write_matrix_market(out / ("w_" + id + ".mtx"), graphs.intra[h].weights);
    write_matrix_market(out / ("l_" + id + ".mtx"), graphs.intra[h].laplacian);
    write_matrix_market(out / ("q_" + id + ".mtx"), graphs.aggregates.regularizer[h]);
  }
  for (const auto& [key, g] : graphs.inter)
    write_matrix_market(
        out / ("z_" + std::to_string(key.first) + "_" + std::to_string(key.second) + ".mtx"),
        g.affinity);
}

}  // namespace mtf::commands
