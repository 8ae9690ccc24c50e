#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mge/engine.hpp"
#include "mge/spaces.hpp"

namespace mge {

// User-item bipartite interactions with train/dev/test splits. Users and
// items use separate contiguous id spaces.
struct InteractionSet {
  int num_users = 0;
  int num_items = 0;
  std::vector<std::pair<int, int>> train, dev, test;
  // per user, sorted union of interacted items across all splits
  std::vector<std::vector<int>> user_items;

  static InteractionSet from_splits(int num_users, int num_items,
                                    std::vector<std::pair<int, int>> train,
                                    std::vector<std::pair<int, int>> dev,
                                    std::vector<std::pair<int, int>> test);

  // Reads <base>.train.tsv / <base>.dev.tsv / <base>.test.tsv with one
  // TAB-separated raw `user item` pair per line; ids are compacted in
  // first-appearance order scanning train, dev, test.
  static InteractionSet load(const std::string& base_path);

  bool interacted(int user, int item) const;
};

enum class RecsysLoss { HINGE, BCE };

// Shallow metric recommender: one embedded point per entity (users first,
// then items) plus per-entity lhs/rhs biases.
struct RecsysModel {
  PointBuffer points;
  std::vector<double> bias_lhs, bias_rhs;
  double margin = 1.0;
  RecsysLoss loss_kind = RecsysLoss::HINGE;
  int num_users = 0;
  int num_items = 0;

  int item_entity(int item) const { return num_users + item; }
};

// phi(u, v) = b_lhs(u) + b_rhs(v) - d(f(u), f(v))^2; closer entities score
// higher at fixed biases.
double score(const RecsysModel& model, int user, int item);

struct HingeTriple {
  int user = 0;
  int pos_item = 0;
  std::span<const int> negatives;
};

// sum over triples and negatives of [m - phi(u,v) + phi(u,w)]_+ : the
// positive must beat every sampled negative by the margin.
double hinge_loss(const RecsysModel& model, std::span<const HingeTriple> batch);

struct LabeledInteraction {
  int user = 0;
  int item = 0;
  int label = 0;  // 1 = observed interaction
};

double bce_recsys_loss(const RecsysModel& model, std::span<const LabeledInteraction> batch);

// Exact analytic gradients of the batch losses wrt coordinates and biases;
// buffers are zeroed first. Returns the loss.
struct RecsysGradients {
  std::vector<double> coords;
  std::vector<double> bias_lhs;
  std::vector<double> bias_rhs;

  static RecsysGradients zeros_like(const RecsysModel& model);
};

double hinge_loss_and_grad(const RecsysModel& model, std::span<const HingeTriple> batch,
                           RecsysGradients& grads);
double bce_loss_and_grad(const RecsysModel& model, std::span<const LabeledInteraction> batch,
                         RecsysGradients& grads);

struct RecsysMetrics {
  double hr10 = 0.0;
  double ndcg10 = 0.0;
  int best_epoch = 0;
  double wall_time_seconds = 0.0;
};

// Defaults matching the tuned protocol: 500 epochs, 10-epoch burn-in at
// lr/10, 50-epoch plateau window.
TrainConfig recsys_default_config();

// Riemannian-SGD training of the shallow recommender. The learning rate
// drops by 5x after `patience` epochs without dev-loss improvement and
// training stops after `patience` further stagnant epochs. Hinge runs use
// 100 negatives per user, BCE one negative per positive, both resampled
// each epoch from the user's non-interacted items. Returns the best-dev
// model and its HR@10 / nDCG@10 on the test split (held-out item ranked
// against 100 sampled negatives).
std::pair<RecsysModel, RecsysMetrics> train_recsys(const InteractionSet& data,
                                                   const SpaceSpec& spec, const TrainConfig& cfg,
                                                   RecsysLoss loss_kind, double margin = 1.0);

// Rank of the held-out item among {itself} + sampled negatives:
// 1 + #negatives scoring strictly higher.
int candidate_rank(const RecsysModel& model, int user, int target_item,
                   std::span<const int> negatives);

}  // namespace mge
