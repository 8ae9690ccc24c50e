#include "mge/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "mge/metrics.hpp"
#include "mge/parallel.hpp"
#include "mge/rng.hpp"

namespace mge {

namespace {

using json = nlohmann::json;

struct GradWorkspace {
  std::vector<double> grads;                    // n x dim accumulator
  std::vector<std::vector<double>> worker_grads;  // one accumulator per extra worker
  std::vector<std::vector<double>> scratch;     // per worker: gx | gy
};

GradWorkspace make_workspace(int n, int dim, int workers) {
  GradWorkspace ws;
  const std::size_t size = static_cast<std::size_t>(n) * dim;
  ws.grads.assign(size, 0.0);
  ws.worker_grads.assign(workers > 1 ? workers - 1 : 0, std::vector<double>(size, 0.0));
  ws.scratch.assign(std::max(workers, 1), std::vector<double>(2 * static_cast<std::size_t>(dim)));
  return ws;
}

// Accumulates the chained gradient of the summed pair loss; returns the loss
// over [begin, end) of `batch`.
double accumulate_range(const PointBuffer& points, std::span<const Pair> batch, std::size_t begin,
                        std::size_t end, double* grads, std::span<double> gx,
                        std::span<double> gy) {
  const int dim = points.dim;
  double loss = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const Pair& p = batch[i];
    const auto dg = distance_with_grad(points.spec, points.row(p.u), points.row(p.v), gx, gy);
    const double ratio2 = (dg.dist / p.dist) * (dg.dist / p.dist);
    loss += std::fabs(ratio2 - 1.0);
    if (!dg.differentiable) continue;
    const double sign = ratio2 > 1.0 ? 1.0 : (ratio2 < 1.0 ? -1.0 : 0.0);
    const double chain = sign * 2.0 * dg.dist / (p.dist * p.dist);
    if (chain == 0.0) continue;
    double* gu = grads + static_cast<std::size_t>(p.u) * dim;
    double* gv = grads + static_cast<std::size_t>(p.v) * dim;
    for (int k = 0; k < dim; ++k) {
      gu[k] += chain * gx[k];
      gv[k] += chain * gy[k];
    }
  }
  return loss;
}

double compute_batch(const PointBuffer& points, std::span<const Pair> batch, GradWorkspace& ws,
                     int workers) {
  std::fill(ws.grads.begin(), ws.grads.end(), 0.0);
  const int dim = points.dim;
  if (workers <= 1 || batch.size() < 64) {
    auto& sc = ws.scratch[0];
    return accumulate_range(points, batch, 0, batch.size(), ws.grads.data(),
                            {sc.data(), static_cast<std::size_t>(dim)},
                            {sc.data() + dim, static_cast<std::size_t>(dim)});
  }
  for (auto& wg : ws.worker_grads) std::fill(wg.begin(), wg.end(), 0.0);
  std::vector<double> losses(static_cast<std::size_t>(workers), 0.0);
  parallel_chunks(batch.size(), workers, [&](int w, std::size_t begin, std::size_t end) {
    double* grads = w == 0 ? ws.grads.data() : ws.worker_grads[w - 1].data();
    auto& sc = ws.scratch[w];
    losses[static_cast<std::size_t>(w)] =
        accumulate_range(points, batch, begin, end, grads,
                         {sc.data(), static_cast<std::size_t>(dim)},
                         {sc.data() + dim, static_cast<std::size_t>(dim)});
  });
  // fixed worker-order reduction keeps results deterministic per worker count
  for (const auto& wg : ws.worker_grads)
    for (std::size_t i = 0; i < ws.grads.size(); ++i) ws.grads[i] += wg[i];
  double loss = 0.0;
  for (double l : losses) loss += l;
  return loss;
}

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

  void update(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grads[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
  }
};

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(cfg.max_grad_norm > 0.0)) throw std::invalid_argument("train: max_grad_norm must be > 0");
  if (cfg.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (cfg.patience < 1 || cfg.patience > cfg.max_epochs)
    throw std::invalid_argument("train: need 1 <= patience <= max_epochs");
  if (cfg.burn_in_epochs < 0 || cfg.burn_in_epochs >= cfg.max_epochs)
    throw std::invalid_argument("train: need 0 <= burn_in_epochs < max_epochs");
  if (!(cfg.burn_in_factor > 0.0)) throw std::invalid_argument("train: burn_in_factor must be > 0");
  if (cfg.workers < 1) throw std::invalid_argument("train: workers must be >= 1");
}

}  // namespace

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

double pair_loss(double d_embed, double d_graph) {
  if (!(d_graph > 0.0)) throw std::domain_error("pair_loss: d_graph must be > 0");
  const double r = d_embed / d_graph;
  return std::fabs(r * r - 1.0);
}

double batch_loss_and_grad(const PointBuffer& points, std::span<const Pair> batch,
                           std::span<double> grads, int workers) {
  if (batch.empty()) throw std::invalid_argument("batch_loss_and_grad: empty batch");
  if (grads.size() != points.coords.size())
    throw std::invalid_argument("batch_loss_and_grad: grads size mismatch");
  auto ws = make_workspace(points.n, points.dim, workers);
  const double loss = compute_batch(points, batch, ws, workers);
  std::copy(ws.grads.begin(), ws.grads.end(), grads.begin());
  return loss;
}

TrainResult train(const PairStore& pairs, const SpaceSpec& spec, const TrainConfig& cfg,
                  int num_nodes, const PointBuffer* warm_start) {
  if (pairs.empty()) throw std::invalid_argument("train: empty pair store");
  validate(cfg);

  int n = num_nodes;
  if (n < 0) {
    n = 0;
    for (const auto& p : pairs.pairs) n = std::max(n, std::max(p.u, p.v) + 1);
  }
  if (warm_start && (warm_start->n != n || warm_start->dim != spec.total_dim()))
    throw std::invalid_argument("train: warm_start shape mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  PointBuffer points = warm_start ? *warm_start : init_points(spec, n, cfg.seed);
  const bool curved = spec.has_poincare();

  const std::size_t total = pairs.size();
  const std::size_t batch_size = cfg.batch_size <= 0
                                     ? total
                                     : std::min(static_cast<std::size_t>(cfg.batch_size), total);

  std::vector<Pair> order = pairs.pairs;
  Rng shuffle_rng(substream_seed(cfg.seed, 0xB5u));
  auto ws = make_workspace(n, points.dim, cfg.workers);
  AdamState adam(cfg.optimizer == Optimizer::ADAM ? points.coords.size() : 0);

  RunReport report;
  report.config_echo = cfg;
  report.space_echo = spec.to_string();

  std::vector<double> best_coords = points.coords;
  double best_d = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr =
        epoch < cfg.burn_in_epochs ? cfg.learning_rate / cfg.burn_in_factor : cfg.learning_rate;
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < total; start += batch_size, ++batch_index) {
      const std::size_t len = std::min(batch_size, total - start);
      const double loss =
          compute_batch(points, {order.data() + start, len}, ws, cfg.workers);
      if (!std::isfinite(loss))
        throw TrainError(epoch, batch_index,
                         "train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      epoch_loss += loss;

      if (curved)
        for (int i = 0; i < n; ++i)
          riemannian_scale(spec, points.row(i),
                           {ws.grads.data() + static_cast<std::size_t>(i) * points.dim,
                            static_cast<std::size_t>(points.dim)});
      clip_global_norm(ws.grads, cfg.max_grad_norm);

      if (cfg.optimizer == Optimizer::ADAM) {
        adam.update(points.coords, ws.grads, lr);
      } else {
        for (std::size_t i = 0; i < points.coords.size(); ++i)
          points.coords[i] -= lr * ws.grads[i];
      }
      if (curved)
        for (int i = 0; i < n; ++i) project(spec, points.row(i));
    }
    report.loss_curve.emplace_back(epoch, epoch_loss);

    const double d = d_avg(points, pairs, cfg.workers);
    if (d < best_d) {
      best_d = d;
      best_coords = points.coords;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= cfg.patience) break;
  }

  points.coords = std::move(best_coords);
  report.final_d_avg = best_d;
  report.best_epoch = best_epoch;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(points), std::move(report)};
}

ConfigGrids ConfigGrids::reconstruction_default() {
  ConfigGrids g;
  g.learning_rates = {0.1, 0.01, 0.001};
  g.batch_sizes = {512, 1024, 2048, kFullBatch};
  g.max_grad_norms = {10.0, 50.0, 250.0};
  return g;
}

TrainResult grid_search(const PairStore& pairs, const SpaceSpec& spec, const ConfigGrids& grids,
                        const TrainConfig& base, int num_nodes, int pool_workers,
                        std::vector<GridRunOutcome>* outcomes) {
  if (grids.size() == 0) throw std::invalid_argument("grid_search: empty grids");

  std::vector<TrainConfig> configs;
  configs.reserve(grids.size());
  for (double lr : grids.learning_rates)
    for (long long bs : grids.batch_sizes)
      for (double clip : grids.max_grad_norms) {
        TrainConfig c = base;
        c.learning_rate = lr;
        c.batch_size = bs;
        c.max_grad_norm = clip;
        configs.push_back(c);
      }

  std::vector<GridRunOutcome> results(configs.size());
  std::vector<PointBuffer> buffers(configs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) break;
      results[i].config = configs[i];
      try {
        auto r = train(pairs, spec, configs[i], num_nodes);
        results[i].ok = true;
        results[i].report = std::move(r.report);
        buffers[i] = std::move(r.points);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };
  if (pool_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < pool_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::size_t best = results.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok) continue;
    if (best == results.size() || results[i].report.final_d_avg < results[best].report.final_d_avg)
      best = i;
  }
  if (outcomes) *outcomes = results;
  if (best == results.size()) {
    for (const auto& r : results)
      if (!r.error.empty()) throw std::runtime_error("grid_search: all runs failed; first: " + r.error);
    throw std::runtime_error("grid_search: all runs failed");
  }
  return {std::move(buffers[best]), std::move(results[best].report)};
}

std::string optimizer_name(Optimizer o) { return o == Optimizer::ADAM ? "ADAM" : "SGD"; }

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "ADAM" || name == "adam") return Optimizer::ADAM;
  if (name == "SGD" || name == "sgd") return Optimizer::SGD;
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected SGD or ADAM)");
}

namespace {

json config_to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"max_grad_norm", cfg.max_grad_norm},
              {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},
              {"burn_in_epochs", cfg.burn_in_epochs},
              {"burn_in_factor", cfg.burn_in_factor},
              {"optimizer", optimizer_name(cfg.optimizer)},
              {"seed", cfg.seed},
              {"workers", cfg.workers}};
}

}  // namespace

TrainConfig read_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_train_config: cannot open '" + path + "'");
  json j = json::parse(in);
  TrainConfig cfg;
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<long long>();
  if (j.contains("max_grad_norm")) cfg.max_grad_norm = j["max_grad_norm"].get<double>();
  if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("patience")) cfg.patience = j["patience"].get<int>();
  if (j.contains("burn_in_epochs")) cfg.burn_in_epochs = j["burn_in_epochs"].get<int>();
  if (j.contains("burn_in_factor")) cfg.burn_in_factor = j["burn_in_factor"].get<double>();
  if (j.contains("optimizer")) cfg.optimizer = optimizer_from_name(j["optimizer"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  return cfg;
}

void write_train_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_config: cannot open '" + path + "'");
  out << config_to_json(cfg).dump(2) << '\n';
}

void write_run_report(const RunReport& report, const std::string& path) {
  json curve = json::array();
  for (const auto& [epoch, loss] : report.loss_curve) curve.push_back({epoch, loss});
  json j{{"final_d_avg", report.final_d_avg},
         {"final_map", report.final_map},
         {"best_epoch", report.best_epoch},
         {"loss_curve", std::move(curve)},
         {"wall_time_seconds", report.wall_time_seconds},
         {"config_echo", config_to_json(report.config_echo)},
         {"space_echo", report.space_echo}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_run_report: cannot open '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace mge
