#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mge/engine.hpp"
#include "mge/graph.hpp"
#include "mge/spaces.hpp"

namespace mge {

// Edge-probability decoder on embedding distances:
// p = (1 + exp((d^2 - r) / t))^-1. Requires t > 0.
double fermi_dirac(double d, double r, double t);

struct LinkSplit {
  std::vector<std::pair<int, int>> train_pos, dev_pos, test_pos;
  std::vector<std::pair<int, int>> train_neg, dev_neg, test_neg;
};

// Seeded split of the edge set (default 70/10/20) plus equal-count non-edge
// negatives per split, sampled uniformly from non-connected pairs without
// replacement across splits.
LinkSplit make_link_split(const Graph& g, std::uint64_t seed, double train_frac = 0.7,
                          double dev_frac = 0.1);

// Shallow link predictor: node embeddings plus the trained decoder scalars.
struct LinkPredModel {
  PointBuffer points;
  double r = 2.0;  // decision boundary
  double t = 1.0;  // temperature, kept > 0
};

struct LinkSample {
  int u = 0;
  int v = 0;
  int label = 0;  // 1 = edge
};

// Binary cross-entropy on the logit (r - d^2)/t, summed over samples, with
// exact gradients wrt coordinates (zeroed first) and the decoder scalars.
double linkpred_loss_and_grad(const LinkPredModel& model, std::span<const LinkSample> samples,
                              std::span<double> coord_grads, double& r_grad, double& t_grad);

struct LinkPredResult {
  LinkPredModel model;
  double auc = 0.0;
  int best_epoch = 0;
};

// Trains embeddings and (r, t) jointly with binary cross-entropy on the
// Fermi-Dirac logit (r - d^2)/t over train edges and non-edges. Early stops
// on the dev BCE loss with cfg.patience; returns the test AUC of the
// best-dev parameters.
LinkPredResult train_linkpred(const Graph& g, const LinkSplit& split, const SpaceSpec& spec,
                              const TrainConfig& cfg);

}  // namespace mge
