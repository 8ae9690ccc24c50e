#include "mge/recsys.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "mge/metrics.hpp"
#include "mge/rng.hpp"

namespace mge {

namespace {

constexpr double kPlateauDecay = 5.0;
constexpr std::uint64_t kTrainNegStream = 0x7261;
constexpr std::uint64_t kDevNegStream = 0x6465;
constexpr std::uint64_t kEvalNegStream = 0x6576;

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -log sigmoid(z) if y = 1, -log(1 - sigmoid(z)) if y = 0.
double bce_term(double z, int y) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (y ? z : 0.0);
}

std::vector<std::pair<int, int>> read_pair_file(const std::string& path,
                                                std::unordered_map<std::string, int>& users,
                                                std::unordered_map<std::string, int>& items) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("recsys: cannot open '" + path +
                             "'; expected <base>.train.tsv, <base>.dev.tsv, <base>.test.tsv");
  std::vector<std::pair<int, int>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string u, v;
    if (!(ls >> u >> v))
      throw std::runtime_error("recsys: " + path + ":" + std::to_string(lineno) +
                               ": expected 'user<TAB>item'");
    const int uid = users.emplace(u, static_cast<int>(users.size())).first->second;
    const int vid = items.emplace(v, static_cast<int>(items.size())).first->second;
    out.emplace_back(uid, vid);
  }
  return out;
}

// Distinct items the user has not interacted with. Rejection sampling with a
// fallback to enumerating the complement when it is small.
std::vector<int> sample_negatives(Rng& rng, const InteractionSet& data, int user, int count) {
  const auto& owned = data.user_items[user];
  const int free_items = data.num_items - static_cast<int>(owned.size());
  if (free_items <= 0) return {};
  if (free_items <= count) {
    std::vector<int> all;
    all.reserve(free_items);
    for (int i = 0; i < data.num_items; ++i)
      if (!std::binary_search(owned.begin(), owned.end(), i)) all.push_back(i);
    return all;
  }
  std::vector<int> picked;
  picked.reserve(count);
  std::vector<char> used;  // lazily sized; small counts dominate
  used.assign(data.num_items, 0);
  int attempts = 0;
  const int max_attempts = 50 * count + 100;
  while (static_cast<int>(picked.size()) < count && attempts++ < max_attempts) {
    const int item = static_cast<int>(rng.next_below(data.num_items));
    if (used[item] || std::binary_search(owned.begin(), owned.end(), item)) continue;
    used[item] = 1;
    picked.push_back(item);
  }
  while (static_cast<int>(picked.size()) < count) {
    for (int i = 0; i < data.num_items && static_cast<int>(picked.size()) < count; ++i)
      if (!used[i] && !std::binary_search(owned.begin(), owned.end(), i)) {
        used[i] = 1;
        picked.push_back(i);
      }
  }
  return picked;
}

void zero(RecsysGradients& g) {
  std::fill(g.coords.begin(), g.coords.end(), 0.0);
  std::fill(g.bias_lhs.begin(), g.bias_lhs.end(), 0.0);
  std::fill(g.bias_rhs.begin(), g.bias_rhs.end(), 0.0);
}

// Adds d(loss)/d(phi(u, item)) = g to the parameter gradients.
void add_phi_grad(const RecsysModel& m, RecsysGradients& grads, std::span<double> gx,
                  std::span<double> gy, int user, int item, double g) {
  const int e = m.item_entity(item);
  const auto dg = distance_with_grad(m.points.spec, m.points.row(user), m.points.row(e), gx, gy);
  grads.bias_lhs[user] += g;
  grads.bias_rhs[e] += g;
  if (!dg.differentiable) return;
  const double chain = g * (-2.0 * dg.dist);  // phi depends on -d^2
  const int dim = m.points.dim;
  double* gu = grads.coords.data() + static_cast<std::size_t>(user) * dim;
  double* gv = grads.coords.data() + static_cast<std::size_t>(e) * dim;
  for (int k = 0; k < dim; ++k) {
    gu[k] += chain * gx[k];
    gv[k] += chain * gy[k];
  }
}

double clip_all(RecsysGradients& g, double max_norm) {
  double sq = 0.0;
  for (double v : g.coords) sq += v * v;
  for (double v : g.bias_lhs) sq += v * v;
  for (double v : g.bias_rhs) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& v : g.coords) v *= s;
    for (double& v : g.bias_lhs) v *= s;
    for (double& v : g.bias_rhs) v *= s;
  }
  return norm;
}

}  // namespace

RecsysGradients RecsysGradients::zeros_like(const RecsysModel& model) {
  RecsysGradients g;
  g.coords.assign(model.points.coords.size(), 0.0);
  g.bias_lhs.assign(model.bias_lhs.size(), 0.0);
  g.bias_rhs.assign(model.bias_rhs.size(), 0.0);
  return g;
}

double hinge_loss_and_grad(const RecsysModel& model, std::span<const HingeTriple> batch,
                           RecsysGradients& grads) {
  zero(grads);
  std::vector<double> gx(model.points.dim), gy(model.points.dim);
  double loss = 0.0;
  for (const auto& t : batch) {
    const double pos = score(model, t.user, t.pos_item);
    for (int w : t.negatives) {
      const double z = model.margin - pos + score(model, t.user, w);
      if (z <= 0.0) continue;
      loss += z;
      add_phi_grad(model, grads, gx, gy, t.user, t.pos_item, -1.0);
      add_phi_grad(model, grads, gx, gy, t.user, w, 1.0);
    }
  }
  return loss;
}

double bce_loss_and_grad(const RecsysModel& model, std::span<const LabeledInteraction> batch,
                         RecsysGradients& grads) {
  zero(grads);
  std::vector<double> gx(model.points.dim), gy(model.points.dim);
  double loss = 0.0;
  for (const auto& s : batch) {
    const double z = score(model, s.user, s.item);
    loss += bce_term(z, s.label);
    add_phi_grad(model, grads, gx, gy, s.user, s.item, stable_sigmoid(z) - s.label);
  }
  return loss;
}

InteractionSet InteractionSet::from_splits(int num_users, int num_items,
                                           std::vector<std::pair<int, int>> train,
                                           std::vector<std::pair<int, int>> dev,
                                           std::vector<std::pair<int, int>> test) {
  InteractionSet s;
  s.num_users = num_users;
  s.num_items = num_items;
  s.train = std::move(train);
  s.dev = std::move(dev);
  s.test = std::move(test);

  auto check = [&](const std::vector<std::pair<int, int>>& split, const char* name) {
    for (const auto& [u, v] : split) {
      if (u < 0 || u >= num_users || v < 0 || v >= num_items)
        throw std::invalid_argument(std::string("InteractionSet: id out of range in ") + name);
    }
  };
  check(s.train, "train");
  check(s.dev, "dev");
  check(s.test, "test");

  s.user_items.assign(num_users, {});
  for (const auto* split : {&s.train, &s.dev, &s.test})
    for (const auto& [u, v] : *split) s.user_items[u].push_back(v);
  for (auto& items : s.user_items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }

  std::vector<char> in_train(num_users, 0);
  std::vector<std::vector<int>> train_items(num_users);
  for (const auto& [u, v] : s.train) {
    in_train[u] = 1;
    train_items[u].push_back(v);
  }
  for (auto& items : train_items) std::sort(items.begin(), items.end());
  for (const auto& [u, v] : s.test) {
    if (!in_train[u])
      throw std::invalid_argument("InteractionSet: test user " + std::to_string(u) +
                                  " missing from train");
    if (std::binary_search(train_items[u].begin(), train_items[u].end(), v))
      throw std::invalid_argument("InteractionSet: test pair duplicated in train");
  }
  return s;
}

InteractionSet InteractionSet::load(const std::string& base_path) {
  std::unordered_map<std::string, int> users, items;
  auto train = read_pair_file(base_path + ".train.tsv", users, items);
  auto dev = read_pair_file(base_path + ".dev.tsv", users, items);
  auto test = read_pair_file(base_path + ".test.tsv", users, items);
  return from_splits(static_cast<int>(users.size()), static_cast<int>(items.size()),
                     std::move(train), std::move(dev), std::move(test));
}

bool InteractionSet::interacted(int user, int item) const {
  const auto& items = user_items[user];
  return std::binary_search(items.begin(), items.end(), item);
}

double score(const RecsysModel& model, int user, int item) {
  const int e = model.item_entity(item);
  const double d = distance(model.points.spec, model.points.row(user), model.points.row(e));
  return model.bias_lhs[user] + model.bias_rhs[e] - d * d;
}

double hinge_loss(const RecsysModel& model, std::span<const HingeTriple> batch) {
  double loss = 0.0;
  for (const auto& t : batch) {
    const double pos = score(model, t.user, t.pos_item);
    for (int w : t.negatives) {
      const double z = model.margin - pos + score(model, t.user, w);
      if (z > 0.0) loss += z;
    }
  }
  return loss;
}

double bce_recsys_loss(const RecsysModel& model, std::span<const LabeledInteraction> batch) {
  double loss = 0.0;
  for (const auto& s : batch) loss += bce_term(score(model, s.user, s.item), s.label);
  return loss;
}

TrainConfig recsys_default_config() {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = kFullBatch;
  cfg.max_grad_norm = 50.0;
  cfg.max_epochs = 500;
  cfg.patience = 50;
  cfg.burn_in_epochs = 10;
  cfg.burn_in_factor = 10.0;
  cfg.optimizer = Optimizer::SGD;
  return cfg;
}

int candidate_rank(const RecsysModel& model, int user, int target_item,
                   std::span<const int> negatives) {
  const double target = score(model, user, target_item);
  int rank = 1;
  for (int w : negatives)
    if (score(model, user, w) > target) ++rank;
  return rank;
}

std::pair<RecsysModel, RecsysMetrics> train_recsys(const InteractionSet& data,
                                                   const SpaceSpec& spec, const TrainConfig& cfg,
                                                   RecsysLoss loss_kind, double margin) {
  if (data.train.empty()) throw std::invalid_argument("train_recsys: empty train split");
  const auto t0 = std::chrono::steady_clock::now();
  const int entities = data.num_users + data.num_items;

  RecsysModel model;
  model.points = init_points(spec, entities, cfg.seed);
  model.bias_lhs.assign(entities, 0.0);
  model.bias_rhs.assign(entities, 0.0);
  model.margin = margin;
  model.loss_kind = loss_kind;
  model.num_users = data.num_users;
  model.num_items = data.num_items;

  const bool curved = spec.has_poincare();
  const int dim = model.points.dim;
  auto grads = RecsysGradients::zeros_like(model);

  // Dev negatives are drawn once so the dev loss is comparable across epochs.
  std::vector<std::vector<int>> dev_negs(data.num_users);
  const int dev_negs_per_user = loss_kind == RecsysLoss::HINGE ? 100 : 1;
  {
    std::vector<char> has_dev(data.num_users, 0);
    for (const auto& [u, v] : data.dev) has_dev[u] = 1;
    for (int u = 0; u < data.num_users; ++u) {
      if (!has_dev[u]) continue;
      Rng rng(substream_seed(cfg.seed, kDevNegStream, static_cast<std::uint64_t>(u)));
      dev_negs[u] = sample_negatives(rng, data, u, dev_negs_per_user);
    }
  }

  auto dev_loss = [&]() {
    if (data.dev.empty()) return 0.0;
    double loss = 0.0;
    for (const auto& [u, v] : data.dev) {
      if (dev_negs[u].empty()) continue;
      if (loss_kind == RecsysLoss::HINGE) {
        const double pos = score(model, u, v);
        for (int w : dev_negs[u]) {
          const double z = model.margin - pos + score(model, u, w);
          if (z > 0.0) loss += z;
        }
      } else {
        loss += bce_term(score(model, u, v), 1);
        loss += bce_term(score(model, u, dev_negs[u][0]), 0);
      }
    }
    return loss;
  };

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(substream_seed(cfg.seed, 0xB5u));

  const std::size_t total = data.train.size();
  const std::size_t batch_size =
      cfg.batch_size <= 0 ? total : std::min(static_cast<std::size_t>(cfg.batch_size), total);

  double lr_base = cfg.learning_rate;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<double> best_coords = model.points.coords;
  std::vector<double> best_blhs = model.bias_lhs, best_brhs = model.bias_rhs;
  int best_epoch = 0;
  int stale = 0;
  bool decayed = false;

  std::vector<std::vector<int>> epoch_negs(data.num_users);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = epoch < cfg.burn_in_epochs ? lr_base / cfg.burn_in_factor : lr_base;

    // per-user seeded substreams, resampled every epoch
    const int negs_per_user = loss_kind == RecsysLoss::HINGE ? 100 : 1;
    for (int u = 0; u < data.num_users; ++u) {
      if (data.user_items[u].empty()) continue;
      Rng rng(substream_seed(cfg.seed ^ kTrainNegStream, static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(u)));
      epoch_negs[u] = sample_negatives(rng, data, u, negs_per_user);
    }

    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batch_index = 0;
    std::vector<HingeTriple> hinge_batch;
    std::vector<LabeledInteraction> bce_batch;
    for (std::size_t start = 0; start < total; start += batch_size, ++batch_index) {
      const std::size_t len = std::min(batch_size, total - start);
      double loss = 0.0;
      if (loss_kind == RecsysLoss::HINGE) {
        hinge_batch.clear();
        for (std::size_t i = start; i < start + len; ++i) {
          const auto& [u, v] = data.train[order[i]];
          hinge_batch.push_back({u, v, epoch_negs[u]});
        }
        loss = hinge_loss_and_grad(model, hinge_batch, grads);
      } else {
        bce_batch.clear();
        for (std::size_t i = start; i < start + len; ++i) {
          const auto& [u, v] = data.train[order[i]];
          bce_batch.push_back({u, v, 1});
          if (!epoch_negs[u].empty()) bce_batch.push_back({u, epoch_negs[u][0], 0});
        }
        loss = bce_loss_and_grad(model, bce_batch, grads);
      }
      if (!std::isfinite(loss))
        throw TrainError(epoch, batch_index,
                         "train_recsys: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      epoch_loss += loss;

      if (curved)
        for (int e = 0; e < entities; ++e)
          riemannian_scale(spec, model.points.row(e),
                           {grads.coords.data() + static_cast<std::size_t>(e) * dim,
                            static_cast<std::size_t>(dim)});
      clip_all(grads, cfg.max_grad_norm);
      for (std::size_t i = 0; i < grads.coords.size(); ++i)
        model.points.coords[i] -= lr * grads.coords[i];
      for (int e = 0; e < entities; ++e) {
        model.bias_lhs[e] -= lr * grads.bias_lhs[e];
        model.bias_rhs[e] -= lr * grads.bias_rhs[e];
      }
      if (curved)
        for (int e = 0; e < entities; ++e) project(spec, model.points.row(e));
    }
    (void)epoch_loss;

    // without a dev split every epoch counts as an improvement (no early stop)
    const double dl = data.dev.empty() ? -static_cast<double>(epoch) : dev_loss();
    if (dl < best_dev) {
      best_dev = dl;
      best_coords = model.points.coords;
      best_blhs = model.bias_lhs;
      best_brhs = model.bias_rhs;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= cfg.patience) {
      if (!decayed) {
        lr_base /= kPlateauDecay;
        decayed = true;
        stale = 0;
      } else {
        break;
      }
    }
  }

  model.points.coords = std::move(best_coords);
  model.bias_lhs = std::move(best_blhs);
  model.bias_rhs = std::move(best_brhs);

  RecsysMetrics metrics;
  metrics.best_epoch = best_epoch;
  if (!data.test.empty()) {
    double hr = 0.0, ndcg = 0.0;
    std::vector<std::vector<int>> eval_negs(data.num_users);
    for (const auto& [u, v] : data.test) {
      if (eval_negs[u].empty()) {
        Rng rng(substream_seed(cfg.seed, kEvalNegStream, static_cast<std::uint64_t>(u)));
        eval_negs[u] = sample_negatives(rng, data, u, 100);
      }
      const int rank = candidate_rank(model, u, v, eval_negs[u]);
      hr += hr_at_k(rank, 10);
      ndcg += ndcg_at_k(rank, 10);
    }
    hr /= static_cast<double>(data.test.size());
    ndcg /= static_cast<double>(data.test.size());
    metrics.hr10 = hr;
    metrics.ndcg10 = ndcg;
  }
  metrics.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), metrics};
}

}  // namespace mge
