#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtf/commands.hpp"
#include "mtf/errors.hpp"
#include "mtf/graphs.hpp"
#include "mtf/parallel.hpp"

namespace fs = std::filesystem;
using namespace mtf;

namespace {

struct ConfigFlags {
  std::size_t clusters = 0;
  double lambda = SolverConfig{}.lambda;
  std::optional<double> delta;
  std::optional<double> delta_ratio;
  std::size_t k = SolverConfig{}.k;
  std::size_t p = SolverConfig{}.p;
  std::size_t max_iters = SolverConfig{}.max_iters;
  double tol = SolverConfig{}.rel_tol;
  std::uint64_t seed = 0;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_grid_axes) {
  cmd->add_option("--clusters", f.clusters, "Clusters per type")->required();
  if (!with_grid_axes) {
    cmd->add_option("--lambda", f.lambda, "Intra-manifold weight");
    cmd->add_option("--delta", f.delta, "Absolute inter-manifold weight (overrides the ratio)");
    cmd->add_option("--delta-ratio", f.delta_ratio, "Inter-manifold weight as a fraction of lambda");
    cmd->add_option("--p", f.p, "Inter-manifold neighbourhood size");
    cmd->add_option("--seed", f.seed, "Master seed");
  }
  cmd->add_option("--k", f.k, "Intra-manifold neighbourhood size");
  cmd->add_option("--max-iters", f.max_iters, "Iteration cap");
  cmd->add_option("--tol", f.tol, "Relative objective change that stops the solver");
}

SolverConfig to_config(const ConfigFlags& f) {
  SolverConfig c;
  c.clusters = f.clusters;
  c.lambda = f.lambda;
  c.delta = commands::resolve_delta(f.lambda, f.delta, f.delta_ratio);
  c.k = f.k;
  c.p = f.p;
  c.max_iters = f.max_iters;
  c.rel_tol = f.tol;
  c.seed = f.seed;
  return c;
}

std::vector<std::size_t> to_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (auto v : commands::parse_index_list(text)) out.push_back(static_cast<std::size_t>(v));
  return out;
}

void write_or_print(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::Io, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-type co-clustering by manifold-regularized matrix tri-factorization"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: MANIFOLD_MTF_THREADS or 1)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted-partition dataset");
  std::size_t types = 0;
  std::string sizes_text;
  SyntheticSpec spec;
  std::string synth_out = "data";
  synth->add_option("--types", types, "Number of object types")->required();
  synth->add_option("--sizes", sizes_text, "Comma-separated type sizes")->required();
  synth->add_option("--clusters", spec.clusters, "Planted clusters")->required();
  synth->add_option("--block-strength", spec.block_strength, "Within-cluster relation value");
  synth->add_option("--noise", spec.noise, "Scale of between-cluster values");
  synth->add_option("--sparsity", spec.sparsity, "Probability an entry is zeroed");
  synth->add_option("--seed", spec.seed, "Master seed");
  synth->add_option("--out", synth_out, "Output directory");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster every type of a dataset");
  std::string manifest;
  std::string config_path;
  ConfigFlags flags;
  bool dump_factors = false;
  std::string cluster_out = "run";
  cluster->add_option("manifest", manifest, "Dataset manifest (JSON)");
  cluster->add_option("--config", config_path, "Replay a config.json snapshot");
  add_config_flags(cluster, flags, false);
  cluster->get_option("--clusters")->required(false);
  cluster->add_flag("--dump-factors", dump_factors, "Also write G and S as MatrixMarket");
  cluster->add_option("--out", cluster_out, "Output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a labelling against ground truth");
  std::string pred_path, truth_path, data_path, csv_path, run_label = "run";
  eval->add_option("--pred", pred_path, "Predicted labels")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", truth_path, "True labels")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_path, "Feature rows (MatrixMarket) for cohesiveness")
      ->check(CLI::ExistingFile);
  eval->add_option("--csv", csv_path, "Append the result to this CSV file");
  eval->add_option("--label", run_label, "Run name for the CSV row");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Parameter sensitivity grid");
  std::string sweep_manifest, lambdas = "10", ratios = "0.1", ps = "5", seeds = "0",
                              sweep_out = "-";
  std::optional<std::size_t> eval_type;
  ConfigFlags sweep_flags;
  sweep->add_option("manifest", sweep_manifest, "Dataset manifest (JSON)")->required();
  add_config_flags(sweep, sweep_flags, true);
  sweep->add_option("--lambdas", lambdas, "List a,b,c or range start:stop:step");
  sweep->add_option("--delta-ratios", ratios, "List or range of delta/lambda");
  sweep->add_option("--ps", ps, "List or range of p");
  sweep->add_option("--seeds", seeds, "List or range of seeds");
  sweep->add_option("--eval-type", eval_type, "Only report this type");
  sweep->add_option("--out", sweep_out, "CSV path, '-' for stdout");

  // scale
  auto* scale = app.add_subcommand("scale", "Time graph construction and iterations as n grows");
  std::string scale_sizes = "200,200,200", schedule = "1,2,4", scale_out = "-";
  std::string grow = "0";
  commands::ScaleOptions scale_opts;
  scale_opts.base.clusters = 4;
  scale_opts.base.noise = 0.1;
  scale_opts.base.sparsity = 0.5;
  ConfigFlags scale_flags;
  scale_flags.clusters = 4;
  scale->add_option("--sizes", scale_sizes, "Base type sizes");
  scale->add_option("--clusters", scale_opts.base.clusters, "Planted clusters");
  scale->add_option("--noise", scale_opts.base.noise, "Between-cluster noise");
  scale->add_option("--sparsity", scale_opts.base.sparsity, "Zeroing probability");
  scale->add_option("--seed", scale_opts.base.seed, "Master seed");
  scale->add_option("--schedule", schedule, "Size multipliers");
  scale->add_option("--grow", grow, "Type to grow, or 'all'");
  scale->add_option("--iters", scale_opts.iterations, "Timed iterations per size");
  scale->add_option("--repeats", scale_opts.repeats, "Timings keep the minimum over repeats");
  scale->add_option("--k", scale_flags.k, "Intra-manifold neighbourhood size");
  scale->add_option("--p", scale_flags.p, "Inter-manifold neighbourhood size");
  scale->add_option("--out", scale_out, "CSV path, '-' for stdout");

  // graphs
  auto* graphs = app.add_subcommand("graphs", "Write the manifold graphs as MatrixMarket");
  std::string graphs_manifest, graphs_out = "graphs";
  ConfigFlags graph_flags;
  graphs->add_option("manifest", graphs_manifest, "Dataset manifest (JSON)")->required();
  graphs->add_option("--lambda", graph_flags.lambda, "Intra-manifold weight");
  graphs->add_option("--delta", graph_flags.delta, "Absolute inter-manifold weight");
  graphs->add_option("--delta-ratio", graph_flags.delta_ratio, "delta / lambda");
  graphs->add_option("--k", graph_flags.k, "Intra-manifold neighbourhood size");
  graphs->add_option("--p", graph_flags.p, "Inter-manifold neighbourhood size");
  graphs->add_option("--out", graphs_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads > 0) parallel::set_thread_count(threads);

    if (*synth) {
      spec.sizes = to_sizes(sizes_text);
      if (spec.sizes.size() == 1) spec.sizes.assign(types, spec.sizes[0]);
      if (spec.sizes.size() != types) {
        std::cerr << "synth: --sizes lists " << spec.sizes.size() << " values for " << types
                  << " types\n";
        return 2;
      }
      const auto path = commands::synth(spec, synth_out);
      std::cout << path.string() << "\n";
    } else if (*cluster) {
      SolverConfig config;
      fs::path manifest_path = manifest;
      if (!config_path.empty()) {
        fs::path recorded;
        config = commands::config_from_json(config_path, &recorded);
        if (manifest_path.empty()) manifest_path = recorded;
      } else {
        if (flags.clusters == 0) {
          std::cerr << "cluster: --clusters is required\n";
          return 2;
        }
        config = to_config(flags);
      }
      if (manifest_path.empty()) {
        std::cerr << "cluster: a manifest is required\n";
        return 2;
      }
      const auto dataset = load_dataset(manifest_path);
      const auto result = commands::cluster(dataset, config);
      commands::write_cluster_artifacts(cluster_out, config, manifest_path, result,
                                        dump_factors);
      std::cout << commands::cluster_summary(dataset, result);
    } else if (*eval) {
      const Labels pred = read_labels(pred_path);
      const Labels truth = read_labels(truth_path);
      std::optional<DenseMatrix> data;
      if (!data_path.empty()) data = read_matrix_market(data_path).to_dense();
      const auto report = commands::evaluate(pred, truth, data ? &*data : nullptr);
      std::cout << report.to_key_value();
      if (!csv_path.empty()) commands::append_metric_csv(csv_path, run_label, report);
    } else if (*sweep) {
      const auto dataset = load_dataset(sweep_manifest);
      commands::SweepGrid grid;
      grid.lambdas = commands::parse_real_list(lambdas);
      grid.delta_ratios = commands::parse_real_list(ratios);
      for (auto v : commands::parse_index_list(ps)) grid.ps.push_back(static_cast<std::size_t>(v));
      grid.seeds = commands::parse_index_list(seeds);
      grid.eval_type = eval_type;
      const auto rows = commands::sweep(dataset, to_config(sweep_flags), grid, parallel::thread_count());
      write_or_print(commands::sweep_csv(rows), sweep_out);
    } else if (*scale) {
      scale_opts.base.sizes = to_sizes(scale_sizes);
      scale_opts.schedule.clear();
      for (auto v : commands::parse_index_list(schedule))
        scale_opts.schedule.push_back(static_cast<std::size_t>(v));
      if (grow == "all") {
        scale_opts.grow_type.reset();
      } else {
        scale_opts.grow_type = static_cast<std::size_t>(commands::parse_index_list(grow).at(0));
      }
      scale_flags.clusters = scale_opts.base.clusters;
      scale_flags.seed = scale_opts.base.seed;
      const auto rows = commands::scale(scale_opts, to_config(scale_flags));
      write_or_print(commands::scale_csv(rows), scale_out);
    } else if (*graphs) {
      const auto dataset = load_dataset(graphs_manifest);
      const double delta = commands::resolve_delta(graph_flags.lambda, graph_flags.delta,
                                                   graph_flags.delta_ratio);
      commands::dump_graphs(graphs_out, build_graphs(dataset, graph_flags.k, graph_flags.p,
                                                     graph_flags.lambda, delta));
      std::cout << graphs_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
