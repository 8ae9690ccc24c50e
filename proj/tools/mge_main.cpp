#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mge/bench.hpp"

namespace {

std::vector<mge::SpaceSpec> parse_spaces(const std::vector<std::string>& tokens) {
  std::vector<mge::SpaceSpec> specs;
  for (const auto& t : tokens) specs.push_back(mge::SpaceSpec::parse(t));
  if (specs.empty()) throw std::invalid_argument("no --space given");
  return specs;
}

std::vector<std::uint64_t> to_seeds(const std::vector<int>& seeds) {
  std::vector<std::uint64_t> out;
  for (int s : seeds) out.push_back(static_cast<std::uint64_t>(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mge: graph embeddings into normed, hyperbolic, and product metric spaces"};
  app.require_subcommand(1);

  // shared options, bound per subcommand
  std::vector<std::string> space_tokens;
  std::vector<int> seeds;
  std::string out_dir = "out";
  std::string config_path;
  int workers = 1;
  std::vector<double> lr_grid;
  std::vector<long long> batch_grid;
  std::vector<double> clip_grid;
  int max_epochs = -1;
  int patience = -1;
  std::string optimizer;

  auto add_common = [&](CLI::App* cmd, bool with_grid) {
    cmd->add_option("--space", space_tokens, "space spec, e.g. linf:20 or l1:10*poincare:10")
        ->required();
    cmd->add_option("--seeds", seeds, "seeds (default 0..4)")->delimiter(',');
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--config", config_path, "JSON training config file");
    cmd->add_option("--workers", workers, "worker threads for sweeps");
    cmd->add_option("--epochs", max_epochs, "max training epochs");
    cmd->add_option("--patience", patience, "early-stopping patience");
    cmd->add_option("--optimizer", optimizer, "SGD or ADAM");
    if (with_grid) {
      cmd->add_option("--lr", lr_grid, "learning-rate grid override")->delimiter(',');
      cmd->add_option("--batch", batch_grid, "batch-size grid override (-1 = full)")
          ->delimiter(',');
      cmd->add_option("--clip", clip_grid, "max-grad-norm grid override")->delimiter(',');
    }
  };

  // generate
  auto* gen = app.add_subcommand("generate", "write an edge-list file from a generator expression");
  std::string gen_expr, gen_out;
  gen->add_option("expr", gen_expr, "e.g. tree(3,5), grid(5,5,5,5), rooted(tree(2,4),grid(5,5),0)")
      ->required();
  gen->add_option("--out", gen_out, "output edge-list path")->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "graph reconstruction benchmark");
  std::string rec_source;
  bool rec_weighted = false;
  rec->add_option("source", rec_source, "generator expression or edge-list path")->required();
  rec->add_flag("--weighted", rec_weighted, "read edge weights from the file");
  add_common(rec, true);

  // capacity
  auto* cap = app.add_subcommand("capacity", "capacity sweep over growing graphs");
  std::string cap_family;
  std::vector<int> cap_sizes;
  std::string cap_data_dir = "data/fullerenes";
  cap->add_option("family", cap_family, "tree | grid | fullerene")->required();
  cap->add_option("--sizes", cap_sizes, "sizes (tree heights, grid sides, or fullerene node counts)")
      ->delimiter(',')
      ->required();
  cap->add_option("--data-dir", cap_data_dir, "directory with fullerene_<n>.edges files");
  add_common(cap, false);

  // recsys
  auto* rc = app.add_subcommand("recsys", "shallow metric recommender");
  std::string rc_dataset, rc_loss = "hinge";
  double rc_margin = 1.0;
  rc->add_option("dataset", rc_dataset, "base path of <base>.{train,dev,test}.tsv")->required();
  rc->add_option("--loss", rc_loss, "hinge or bce");
  rc->add_option("--margin", rc_margin, "hinge margin");
  add_common(rc, false);

  // linkpred
  auto* lp = app.add_subcommand("linkpred", "shallow link prediction with the Fermi-Dirac decoder");
  std::string lp_source;
  lp->add_option("source", lp_source, "generator expression or edge-list path")->required();
  add_common(lp, false);

  CLI11_PARSE(app, argc, argv);

  try {
    auto base_config = [&](mge::TrainConfig defaults) {
      mge::TrainConfig cfg = config_path.empty() ? defaults : mge::read_train_config(config_path);
      if (max_epochs > 0) cfg.max_epochs = max_epochs;
      if (patience > 0) cfg.patience = patience;
      if (!optimizer.empty()) cfg.optimizer = mge::optimizer_from_name(optimizer);
      return cfg;
    };

    if (gen->parsed()) {
      const auto r = mge::bench::cmd_generate(gen_expr, gen_out);
      std::printf("nodes=%d edges=%d -> %s\n", r.nodes, r.edges, gen_out.c_str());
      return 0;
    }

    if (rec->parsed()) {
      mge::bench::ExperimentPlan plan;
      plan.graph_source = rec_source;
      plan.weighted = rec_weighted;
      plan.spaces = parse_spaces(space_tokens);
      if (!seeds.empty()) plan.seeds = to_seeds(seeds);
      plan.base = base_config(mge::TrainConfig{});
      if (!lr_grid.empty()) plan.grids.learning_rates = lr_grid;
      if (!batch_grid.empty()) plan.grids.batch_sizes = batch_grid;
      if (!clip_grid.empty()) plan.grids.max_grad_norms = clip_grid;
      plan.out_dir = out_dir;
      plan.pool_workers = workers;
      const int ok = mge::bench::cmd_reconstruct(plan);
      std::printf("reconstruct: %d runs ok, results in %s\n", ok, out_dir.c_str());
      return ok > 0 ? 0 : 1;
    }

    if (cap->parsed()) {
      mge::bench::CapacityPlan plan;
      plan.family = cap_family;
      plan.sizes = cap_sizes;
      plan.spaces = parse_spaces(space_tokens);
      if (!seeds.empty()) plan.seeds = to_seeds(seeds);
      mge::TrainConfig defaults;
      defaults.learning_rate = 0.1;
      defaults.max_grad_norm = 250.0;
      plan.base = base_config(defaults);
      plan.out_dir = out_dir;
      plan.data_dir = cap_data_dir;
      plan.pool_workers = workers;
      const int ok = mge::bench::cmd_capacity(plan);
      std::printf("capacity: %d runs ok, results in %s\n", ok, out_dir.c_str());
      return ok > 0 ? 0 : 1;
    }

    if (rc->parsed()) {
      mge::bench::RecsysPlan plan;
      plan.dataset_path = rc_dataset;
      plan.spaces = parse_spaces(space_tokens);
      if (!seeds.empty()) plan.seeds = to_seeds(seeds);
      plan.base = base_config(mge::recsys_default_config());
      if (rc_loss == "hinge") plan.loss = mge::RecsysLoss::HINGE;
      else if (rc_loss == "bce") plan.loss = mge::RecsysLoss::BCE;
      else throw std::invalid_argument("--loss must be hinge or bce");
      plan.margin = rc_margin;
      plan.out_dir = out_dir;
      plan.pool_workers = workers;
      const int ok = mge::bench::cmd_recsys(plan);
      std::printf("recsys: %d runs ok, results in %s\n", ok, out_dir.c_str());
      return ok > 0 ? 0 : 1;
    }

    if (lp->parsed()) {
      mge::bench::LinkpredPlan plan;
      plan.graph_source = lp_source;
      plan.spaces = parse_spaces(space_tokens);
      if (!seeds.empty()) plan.seeds = to_seeds(seeds);
      mge::TrainConfig defaults;
      defaults.max_epochs = 1000;
      defaults.patience = 200;
      defaults.learning_rate = 0.01;
      defaults.max_grad_norm = 50.0;
      plan.base = base_config(defaults);
      plan.out_dir = out_dir;
      plan.pool_workers = workers;
      const int ok = mge::bench::cmd_linkpred(plan);
      std::printf("linkpred: %d runs ok, results in %s\n", ok, out_dir.c_str());
      return ok > 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
