#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtf/data.hpp"
#include "mtf/graphs.hpp"
#include "mtf/metrics.hpp"
#include "mtf/solver.hpp"

namespace mtf::commands {

// ---- synth ---------------------------------------------------------------

/// Generates a planted dataset from `spec` (whose seed is the master seed;
/// the generator uses the derived Generator stream) and saves it to `out`.
/// Returns the manifest path.
std::filesystem::path synth(SyntheticSpec spec, const std::filesystem::path& out);

// ---- cluster -------------------------------------------------------------

struct ClusterResult {
  SolveReport report;
  std::vector<Labels> labels;
  std::map<std::size_t, MetricReport> metrics;  // types with ground truth
};

/// delta / lambda when neither delta nor a ratio is given.
inline constexpr double kDefaultDeltaRatio = 0.1;

/// Resolves the absolute delta: an explicit delta wins, otherwise
/// ratio * lambda with the ratio defaulting to kDefaultDeltaRatio.
double resolve_delta(double lambda, std::optional<double> delta, std::optional<double> ratio);

/// Metrics for every type with truth; cohesiveness uses the type's
/// concatenated relation rows as the feature vectors.
std::map<std::size_t, MetricReport> evaluate_types(const MultiAspectDataset& dataset,
                                                   const std::vector<Labels>& labels);

ClusterResult cluster(const MultiAspectDataset& dataset, const SolverConfig& config);

/// "iter,reconstruction,intra,inter,total" followed by one row per trace entry.
std::string trace_csv(const std::vector<ObjectiveBreakdown>& trace);

/// Human-readable summary: final objective breakdown, iteration count and
/// per-type metrics.
std::string cluster_summary(const MultiAspectDataset& dataset, const ClusterResult& result);

std::string config_to_json(const SolverConfig& config, const std::filesystem::path& manifest);
/// Reads a snapshot written by config_to_json. The manifest path is returned
/// through `manifest` when non-null.
SolverConfig config_from_json(const std::filesystem::path& path,
                              std::filesystem::path* manifest = nullptr);

/// Writes config.json, labels_<h>.txt, trace.csv, metrics.csv (when any type
/// has truth) and, if requested, g_<h>.mtx / s_<h>_<l>.mtx into `out`.
void write_cluster_artifacts(const std::filesystem::path& out, const SolverConfig& config,
                             const std::filesystem::path& manifest, const ClusterResult& result,
                             bool dump_factors);

// ---- eval ----------------------------------------------------------------

/// NMI and matched accuracy of `pred` against `truth`; cohesiveness over the
/// rows of `data` when given, NaN otherwise. Throws DataError on a length
/// mismatch.
MetricReport evaluate(const Labels& pred, const Labels& truth, const DenseMatrix* data);

/// Appends `report` as a CSV row, writing the header first if the file is new.
void append_metric_csv(const std::filesystem::path& path, const std::string& label,
                       const MetricReport& report);

// ---- sweep ---------------------------------------------------------------

struct SweepGrid {
  std::vector<double> lambdas;
  std::vector<double> delta_ratios;
  std::vector<std::size_t> ps;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> eval_type;  // restrict rows to one type
};

struct SweepRow {
  double lambda = 0.0;
  double delta_ratio = 0.0;
  std::size_t p = 0;
  std::optional<std::uint64_t> seed;  // empty for the mean row
  std::size_t type = 0;
  double nmi = 0.0;
  double ac = 0.0;
  double iters = 0.0;
  double total_obj = 0.0;
  bool failed = false;
};

/// Parses "a,b,c" or "start:stop:step" (inclusive) into values.
std::vector<double> parse_real_list(const std::string& text);
std::vector<std::uint64_t> parse_index_list(const std::string& text);

/// One clustering run per (lambda, delta_ratio, p, seed) using `base` for
/// every other field. Cells run on up to `workers` threads; a failing cell
/// yields NaN rows. Output is sorted: per-seed rows first, then the mean row,
/// for each (lambda, delta_ratio, p, type).
std::vector<SweepRow> sweep(const MultiAspectDataset& dataset, const SolverConfig& base,
                            const SweepGrid& grid, int workers);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// ---- scale ---------------------------------------------------------------

struct ScaleOptions {
  SyntheticSpec base;
  std::vector<std::size_t> schedule{1, 2, 4};
  std::optional<std::size_t> grow_type = 0;  // empty: grow every type
  std::size_t iterations = 10;
  std::size_t repeats = 3;  // each timing is the minimum over repeats
};

struct ScaleRow {
  std::size_t multiplier = 0;
  std::vector<std::size_t> sizes;
  double graph_seconds = 0.0;
  double init_seconds = 0.0;
  double solve_seconds = 0.0;
  double per_iter_seconds = 0.0;
  std::size_t iterations = 0;
  std::size_t memory_bytes = 0;  // estimate of the largest live structures
};

std::vector<ScaleRow> scale(const ScaleOptions& options, const SolverConfig& config);
std::string scale_csv(const std::vector<ScaleRow>& rows);

/// Rough byte count of the relations, graphs, dense features and factors.
std::size_t estimate_memory(const MultiAspectDataset& dataset, const GraphSet& graphs,
                            std::size_t clusters);

// ---- graphs --------------------------------------------------------------

/// Writes w_<h>.mtx, l_<h>.mtx, z_<h>_<l>.mtx for every ordered pair and
/// q_<h>.mtx into `out`.
void dump_graphs(const std::filesystem::path& out, const GraphSet& graphs);

}  // namespace mtf::commands
