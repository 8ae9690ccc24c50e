#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mge/graph.hpp"
#include "mge/spaces.hpp"

namespace mge {

enum class Optimizer { SGD, ADAM };

// Sentinel for "one batch per epoch containing every pair".
inline constexpr long long kFullBatch = -1;

struct TrainConfig {
  double learning_rate = 0.01;
  long long batch_size = kFullBatch;  // <= 0 means full batch
  double max_grad_norm = 250.0;
  int max_epochs = 3000;
  int patience = 200;
  int burn_in_epochs = 0;
  double burn_in_factor = 10.0;
  Optimizer optimizer = Optimizer::ADAM;
  std::uint64_t seed = 0;
  // Gradient work is split over this many threads; results are deterministic
  // for a fixed count, so it is part of the run fingerprint.
  int workers = 1;
};

struct RunReport {
  double final_d_avg = 0.0;
  double final_map = -1.0;  // filled by fidelity evaluation, -1 = not evaluated
  int best_epoch = 0;
  std::vector<std::pair<int, double>> loss_curve;  // (epoch, summed loss)
  double wall_time_seconds = 0.0;
  TrainConfig config_echo;
  std::string space_echo;
};

// Raised when the loss turns non-finite; carries where it happened.
class TrainError : public std::runtime_error {
 public:
  TrainError(int epoch, int batch_index, const std::string& what)
      : std::runtime_error(what), epoch(epoch), batch_index(batch_index) {}
  int epoch;
  int batch_index;
};

// |(d_embed/d_graph)^2 - 1|; the squared-ratio reconstruction penalty of a
// single pair. Throws std::domain_error when d_graph <= 0.
double pair_loss(double d_embed, double d_graph);

// Sum of pair losses over `batch` and its exact analytic gradient,
// accumulated into `grads` (n x dim, zeroed first). Returns the loss.
double batch_loss_and_grad(const PointBuffer& points, std::span<const Pair> batch,
                           std::span<double> grads, int workers = 1);

// Rescales grads so its global l2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(std::span<double> grads, double max_norm);

struct TrainResult {
  PointBuffer points;
  RunReport report;
};

// Minimizes the reconstruction loss over node coordinates. Per step:
// gradients -> riemannian_scale -> global-norm clip -> optimizer update ->
// project. Tracks D_avg every epoch on the full store, keeps the best
// coordinates, and stops after `patience` epochs without improvement.
// `num_nodes` < 0 derives the node count from the pair store; `warm_start`
// resumes from existing coordinates instead of the seeded initialization.
TrainResult train(const PairStore& pairs, const SpaceSpec& spec, const TrainConfig& cfg,
                  int num_nodes = -1, const PointBuffer* warm_start = nullptr);

struct ConfigGrids {
  std::vector<double> learning_rates;
  std::vector<long long> batch_sizes;
  std::vector<double> max_grad_norms;

  // lr {0.1, 0.01, 0.001} x batch {512, 1024, 2048, FULL} x clip {10, 50, 250}
  static ConfigGrids reconstruction_default();
  std::size_t size() const {
    return learning_rates.size() * batch_sizes.size() * max_grad_norms.size();
  }
};

struct GridRunOutcome {
  TrainConfig config;
  bool ok = false;
  std::string error;
  RunReport report;
};

// One run per (lr, batch, clip) grid point; returns the run with the lowest
// final_d_avg, ties broken by grid order. Individual aborts are recorded and
// skipped; throws only if every point fails. Grid points execute on a pool
// of `pool_workers` threads (selection stays deterministic).
TrainResult grid_search(const PairStore& pairs, const SpaceSpec& spec, const ConfigGrids& grids,
                        const TrainConfig& base, int num_nodes = -1, int pool_workers = 1,
                        std::vector<GridRunOutcome>* outcomes = nullptr);

// ---- Config / report files (JSON, field names mirror the structs) ------

TrainConfig read_train_config(const std::string& path);
void write_train_config(const TrainConfig& cfg, const std::string& path);
void write_run_report(const RunReport& report, const std::string& path);

std::string optimizer_name(Optimizer o);
Optimizer optimizer_from_name(const std::string& name);

}  // namespace mge
