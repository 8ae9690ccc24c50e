#include "mge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mge/parallel.hpp"

namespace mge {

namespace {

// Distances this small are treated as exact zeros in rankings.
constexpr double kRankEps = 1e-12;

double snap(double d) { return d < kRankEps ? 0.0 : d; }

}  // namespace

double d_avg(const PointBuffer& points, const PairStore& pairs, int workers) {
  if (pairs.empty()) throw std::invalid_argument("d_avg: empty pair store");
  std::vector<double> partial(static_cast<std::size_t>(std::max(workers, 1)), 0.0);
  parallel_chunks(pairs.size(), workers, [&](int w, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& p = pairs.pairs[i];
      const double dy = distance(points.spec, points.row(p.u), points.row(p.v));
      s += std::fabs(dy - p.dist) / p.dist;
    }
    partial[static_cast<std::size_t>(w)] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(pairs.size());
}

double map_score(const PointBuffer& points, const Graph& graph, int workers) {
  if (!graph.unit_weights())
    throw std::invalid_argument("map_score: applicable only to unweighted graphs");
  const int n = graph.num_nodes();
  if (n != points.n) throw std::invalid_argument("map_score: node count mismatch");

  std::vector<double> per_node(n, -1.0);  // -1 marks skipped (degree 0)
  parallel_chunks(static_cast<std::size_t>(n), workers, [&](int, std::size_t begin, std::size_t end) {
    std::vector<double> all;
    std::vector<double> nbr;
    for (std::size_t a = begin; a < end; ++a) {
      const int node = static_cast<int>(a);
      const int deg = graph.degree(node);
      if (deg == 0) continue;

      all.clear();
      nbr.clear();
      for (int v = 0; v < n; ++v) {
        if (v == node) continue;
        all.push_back(snap(distance(points.spec, points.row(node), points.row(v))));
      }
      for (const auto& [v, w] : graph.neighbors(node)) {
        (void)w;
        const int off = v < node ? v : v - 1;
        nbr.push_back(all[static_cast<std::size_t>(off)]);
      }
      std::sort(all.begin(), all.end());
      std::sort(nbr.begin(), nbr.end());

      double ap = 0.0;
      for (double r : nbr) {
        const auto ball = std::upper_bound(all.begin(), all.end(), r) - all.begin();
        const auto hits = std::upper_bound(nbr.begin(), nbr.end(), r) - nbr.begin();
        ap += static_cast<double>(hits) / static_cast<double>(ball);
      }
      per_node[a] = ap / deg;
    }
  });

  double sum = 0.0;
  int counted = 0;
  for (double v : per_node) {
    if (v >= 0.0) {
      sum += v;
      ++counted;
    }
  }
  if (counted == 0) throw std::invalid_argument("map_score: graph has no edges");
  return sum / counted;
}

std::vector<HistogramBin> distortion_histogram(const PointBuffer& points, const PairStore& pairs,
                                               int bins) {
  if (bins < 1) throw std::invalid_argument("distortion_histogram: bins must be >= 1");
  if (pairs.empty()) throw std::invalid_argument("distortion_histogram: empty pair store");

  std::vector<double> values;
  values.reserve(pairs.size());
  for (const auto& p : pairs.pairs) {
    const double dy = distance(points.spec, points.row(p.u), points.row(p.v));
    values.push_back(dy / p.dist - 1.0);
  }
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn_it, hi = *mx_it;
  const double width = hi - lo;

  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[b].lo = lo + width * b / bins;
    out[b].hi = lo + width * (b + 1) / bins;
  }
  for (double v : values) {
    int idx = width > 0.0 ? static_cast<int>((v - lo) / width * bins) : 0;
    idx = std::clamp(idx, 0, bins - 1);
    ++out[static_cast<std::size_t>(idx)].count;
  }
  return out;
}

double auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
  if (scores_pos.empty() || scores_neg.empty())
    throw std::invalid_argument("auc: both score lists must be non-empty");

  // Midrank formulation: exact pairwise counting with ties worth 0.5.
  std::vector<std::pair<double, int>> all;  // (score, is_positive)
  all.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) all.emplace_back(s, 1);
  for (double s : scores_neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(scores_pos.size());
  const double nn = static_cast<double>(scores_neg.size());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

int hr_at_k(int rank_of_target, int k) {
  if (rank_of_target < 1) throw std::invalid_argument("hr_at_k: rank must be >= 1");
  return rank_of_target <= k ? 1 : 0;
}

double ndcg_at_k(int rank_of_target, int k) {
  if (rank_of_target < 1) throw std::invalid_argument("ndcg_at_k: rank must be >= 1");
  if (rank_of_target > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank_of_target) + 1.0);
}

}  // namespace mge
