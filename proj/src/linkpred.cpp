#include "mge/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "mge/metrics.hpp"
#include "mge/rng.hpp"

namespace mge {

namespace {

constexpr double kMinTemperature = 1e-3;

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_term(double z, int y) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (y ? z : 0.0);
}

}  // namespace

double fermi_dirac(double d, double r, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("fermi_dirac: t must be > 0");
  return stable_sigmoid((r - d * d) / t);
}

double linkpred_loss_and_grad(const LinkPredModel& model, std::span<const LinkSample> samples,
                              std::span<double> coord_grads, double& r_grad, double& t_grad) {
  std::fill(coord_grads.begin(), coord_grads.end(), 0.0);
  r_grad = t_grad = 0.0;
  const auto& spec = model.points.spec;
  const int dim = model.points.dim;
  std::vector<double> gx(dim), gy(dim);
  double loss = 0.0;
  for (const auto& s : samples) {
    const auto dg = distance_with_grad(spec, model.points.row(s.u), model.points.row(s.v), gx, gy);
    const double z = (model.r - dg.dist * dg.dist) / model.t;
    loss += bce_term(z, s.label);
    const double gz = stable_sigmoid(z) - s.label;  // dL/dz
    r_grad += gz / model.t;
    t_grad += gz * (-(model.r - dg.dist * dg.dist) / (model.t * model.t));
    if (!dg.differentiable) continue;
    const double chain = gz * (-2.0 * dg.dist / model.t);
    double* gu = coord_grads.data() + static_cast<std::size_t>(s.u) * dim;
    double* gv = coord_grads.data() + static_cast<std::size_t>(s.v) * dim;
    for (int k = 0; k < dim; ++k) {
      gu[k] += chain * gx[k];
      gv[k] += chain * gy[k];
    }
  }
  return loss;
}

LinkSplit make_link_split(const Graph& g, std::uint64_t seed, double train_frac, double dev_frac) {
  if (!(train_frac > 0.0) || !(dev_frac >= 0.0) || train_frac + dev_frac >= 1.0)
    throw std::invalid_argument("make_link_split: need train_frac > 0, train+dev < 1");
  const int n = g.num_nodes();
  const auto& edges = g.edges();
  const std::size_t m = edges.size();
  if (m < 3) throw std::invalid_argument("make_link_split: graph too small to split");

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  Rng rng(substream_seed(seed, 0x5Eu));
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(train_frac * m);
  const auto n_dev = static_cast<std::size_t>(dev_frac * m);

  LinkSplit split;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = edges[order[i]];
    auto pair = std::make_pair(e.u, e.v);
    if (i < n_train) split.train_pos.push_back(pair);
    else if (i < n_train + n_dev) split.dev_pos.push_back(pair);
    else split.test_pos.push_back(pair);
  }

  const std::size_t total_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (total_pairs < 2 * m)
    throw std::invalid_argument("make_link_split: not enough non-edges to sample negatives");

  std::set<std::pair<int, int>> taken;
  for (const auto& e : edges) taken.emplace(e.u, e.v);
  auto draw_negatives = [&](std::size_t count) {
    std::vector<std::pair<int, int>> out;
    out.reserve(count);
    while (out.size() < count) {
      int u = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      int v = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (!taken.emplace(u, v).second) continue;
      out.emplace_back(u, v);
    }
    return out;
  };
  split.train_neg = draw_negatives(split.train_pos.size());
  split.dev_neg = draw_negatives(split.dev_pos.size());
  split.test_neg = draw_negatives(split.test_pos.size());
  return split;
}

LinkPredResult train_linkpred(const Graph& g, const LinkSplit& split, const SpaceSpec& spec,
                              const TrainConfig& cfg) {
  if (split.train_pos.empty() || split.train_neg.empty())
    throw std::invalid_argument("train_linkpred: empty train split");

  LinkPredModel model;
  model.points = init_points(spec, g.num_nodes(), cfg.seed);
  model.r = 2.0;
  model.t = 1.0;

  const bool curved = spec.has_poincare();
  const int n = g.num_nodes();
  const int dim = model.points.dim;

  std::vector<LinkSample> samples;
  samples.reserve(split.train_pos.size() + split.train_neg.size());
  for (const auto& [u, v] : split.train_pos) samples.push_back({u, v, 1});
  for (const auto& [u, v] : split.train_neg) samples.push_back({u, v, 0});

  std::vector<double> coord_grads(model.points.coords.size(), 0.0);
  double r_grad = 0.0, t_grad = 0.0;

  auto logit = [&](int u, int v) {
    const double d = distance(spec, model.points.row(u), model.points.row(v));
    return (model.r - d * d) / model.t;
  };
  auto split_loss = [&](const std::vector<std::pair<int, int>>& pos,
                        const std::vector<std::pair<int, int>>& neg) {
    double loss = 0.0;
    for (const auto& [u, v] : pos) loss += bce_term(logit(u, v), 1);
    for (const auto& [u, v] : neg) loss += bce_term(logit(u, v), 0);
    return loss;
  };

  Rng shuffle_rng(substream_seed(cfg.seed, 0xB5u));
  const std::size_t total = samples.size();
  const std::size_t batch_size =
      cfg.batch_size <= 0 ? total : std::min(static_cast<std::size_t>(cfg.batch_size), total);

  struct AdamScalar {
    double m = 0.0, v = 0.0;
  };
  std::vector<double> adam_m, adam_v;
  AdamScalar adam_r, adam_t;
  long long adam_step = 0;
  if (cfg.optimizer == Optimizer::ADAM) {
    adam_m.assign(coord_grads.size(), 0.0);
    adam_v.assign(coord_grads.size(), 0.0);
  }
  constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;

  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<double> best_coords = model.points.coords;
  double best_r = model.r, best_t = model.t;
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr =
        epoch < cfg.burn_in_epochs ? cfg.learning_rate / cfg.burn_in_factor : cfg.learning_rate;
    shuffle_rng.shuffle(samples);

    int batch_index = 0;
    for (std::size_t start = 0; start < total; start += batch_size, ++batch_index) {
      const std::size_t len = std::min(batch_size, total - start);
      const double loss =
          linkpred_loss_and_grad(model, {samples.data() + start, len}, coord_grads, r_grad, t_grad);
      if (!std::isfinite(loss))
        throw TrainError(epoch, batch_index,
                         "train_linkpred: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));

      if (curved)
        for (int i = 0; i < n; ++i)
          riemannian_scale(spec, model.points.row(i),
                           {coord_grads.data() + static_cast<std::size_t>(i) * dim,
                            static_cast<std::size_t>(dim)});
      double sq = r_grad * r_grad + t_grad * t_grad;
      for (double v : coord_grads) sq += v * v;
      const double norm = std::sqrt(sq);
      if (norm > cfg.max_grad_norm && norm > 0.0) {
        const double sc = cfg.max_grad_norm / norm;
        for (double& v : coord_grads) v *= sc;
        r_grad *= sc;
        t_grad *= sc;
      }

      if (cfg.optimizer == Optimizer::ADAM) {
        ++adam_step;
        const double bc1 = 1.0 - std::pow(kB1, static_cast<double>(adam_step));
        const double bc2 = 1.0 - std::pow(kB2, static_cast<double>(adam_step));
        for (std::size_t i = 0; i < coord_grads.size(); ++i) {
          adam_m[i] = kB1 * adam_m[i] + (1.0 - kB1) * coord_grads[i];
          adam_v[i] = kB2 * adam_v[i] + (1.0 - kB2) * coord_grads[i] * coord_grads[i];
          model.points.coords[i] -= lr * (adam_m[i] / bc1) / (std::sqrt(adam_v[i] / bc2) + kEps);
        }
        auto scalar_update = [&](AdamScalar& st, double grad, double& param) {
          st.m = kB1 * st.m + (1.0 - kB1) * grad;
          st.v = kB2 * st.v + (1.0 - kB2) * grad * grad;
          param -= lr * (st.m / bc1) / (std::sqrt(st.v / bc2) + kEps);
        };
        scalar_update(adam_r, r_grad, model.r);
        scalar_update(adam_t, t_grad, model.t);
      } else {
        for (std::size_t i = 0; i < coord_grads.size(); ++i)
          model.points.coords[i] -= lr * coord_grads[i];
        model.r -= lr * r_grad;
        model.t -= lr * t_grad;
      }
      if (model.t < kMinTemperature) model.t = kMinTemperature;
      if (curved)
        for (int i = 0; i < n; ++i) project(spec, model.points.row(i));
    }

    const double dl = split.dev_pos.empty() ? -static_cast<double>(epoch)
                                            : split_loss(split.dev_pos, split.dev_neg);
    if (dl < best_dev) {
      best_dev = dl;
      best_coords = model.points.coords;
      best_r = model.r;
      best_t = model.t;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  model.points.coords = std::move(best_coords);
  model.r = best_r;
  model.t = best_t;

  std::vector<double> pos_scores, neg_scores;
  pos_scores.reserve(split.test_pos.size());
  neg_scores.reserve(split.test_neg.size());
  for (const auto& [u, v] : split.test_pos)
    pos_scores.push_back(
        fermi_dirac(distance(spec, model.points.row(u), model.points.row(v)), model.r, model.t));
  for (const auto& [u, v] : split.test_neg)
    neg_scores.push_back(
        fermi_dirac(distance(spec, model.points.row(u), model.points.row(v)), model.r, model.t));

  LinkPredResult result;
  result.auc = auc(pos_scores, neg_scores);
  result.model = std::move(model);
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace mge
