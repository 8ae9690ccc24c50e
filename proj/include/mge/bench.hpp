#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mge/engine.hpp"
#include "mge/graph.hpp"
#include "mge/linkpred.hpp"
#include "mge/metrics.hpp"
#include "mge/recsys.hpp"
#include "mge/spaces.hpp"

namespace mge::bench {

// ---- Generator expressions ----------------------------------------------
// Grammar: tree(b,h) | grid(s1,...,sk) | cartesian(a,b) | rooted(base,fiber,root)
//        | margulis(n) | paley(q) | chordal(p); nesting allowed for product args.

Graph parse_generator_expr(const std::string& expr);

struct GraphSource {
  Graph graph;
  std::string name;  // CSV-safe label
};

// `source` is a generator expression when it contains '(' and an existing
// edge-list file path otherwise.
GraphSource resolve_graph_source(const std::string& source, bool weighted = false);

// ---- CSV ------------------------------------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const Csv& csv, const std::string& path);
Csv read_csv(const std::string& path);

// mean and sample standard deviation (0 for a single value)
std::pair<double, double> mean_std(const std::vector<double>& values);

// ---- SVG plots --------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void write_line_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<Series>& series,
                    bool log_y = false);
void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<HistogramBin>& bins);

// ---- Commands ---------------------------------------------------------------

struct GenerateResult {
  int nodes = 0;
  int edges = 0;
};

// Writes <out_path> (edge list) and <out_path>.nodes.tsv.
GenerateResult cmd_generate(const std::string& expr, const std::string& out_path);

struct ExperimentPlan {
  std::string graph_source;
  bool weighted = false;
  std::vector<SpaceSpec> spaces;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  ConfigGrids grids = ConfigGrids::reconstruction_default();
  TrainConfig base;
  std::string out_dir;
  int pool_workers = 1;
};

// Grid search per (space, seed); writes runs.csv, summary.csv, a combined
// loss-curve SVG and per-space distortion histograms (CSV + SVG). Returns
// the number of successful runs.
int cmd_reconstruct(const ExperimentPlan& plan);

struct CapacityPlan {
  std::string family;  // tree | grid | fullerene
  std::vector<int> sizes;
  std::vector<SpaceSpec> spaces;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  TrainConfig base;
  std::string out_dir;
  std::string data_dir = "data/fullerenes";  // fullerene_<n>.edges files
  int pool_workers = 1;
};

// One train() per (size, space, seed) at the base config; writes capacity
// CSVs plus D_avg-vs-size and time-vs-size SVGs.
int cmd_capacity(const CapacityPlan& plan);

struct RecsysPlan {
  std::string dataset_path;  // base path of <base>.{train,dev,test}.tsv
  std::vector<SpaceSpec> spaces;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  TrainConfig base = recsys_default_config();
  RecsysLoss loss = RecsysLoss::HINGE;
  double margin = 1.0;
  std::string out_dir;
  int pool_workers = 1;
};

int cmd_recsys(const RecsysPlan& plan);

struct LinkpredPlan {
  std::string graph_source;
  std::vector<SpaceSpec> spaces;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  TrainConfig base;
  std::string out_dir;
  int pool_workers = 1;
};

int cmd_linkpred(const LinkpredPlan& plan);

}  // namespace mge::bench
