#pragma once

#include <vector>

#include "mge/graph.hpp"
#include "mge/spaces.hpp"

namespace mge {

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  long long count = 0;
};

// Reconstruction fidelity of one embedding. d_avg and map are fractions;
// they are formatted as percentages only at the reporting layer.
struct FidelityReport {
  double d_avg = 0.0;
  double map = 0.0;
  std::vector<HistogramBin> histogram;
};

// Mean over stored pairs of |d_Y - d_G| / d_G. Chunked over `workers`
// threads with a fixed-order merge.
double d_avg(const PointBuffer& points, const PairStore& pairs, int workers = 1);

// Mean average precision of graph neighborhoods under the embedding
// distance. R_{a,b} is the closed ball around f(a) of radius d(f(a), f(b))
// (ties included, a excluded). Degree-0 nodes are skipped and the outer
// average adjusted. Throws std::invalid_argument on weighted graphs.
double map_score(const PointBuffer& points, const Graph& graph, int workers = 1);

// Histogram of d_Y/d_G - 1 over all stored pairs, uniform bins spanning the
// observed [min, max].
std::vector<HistogramBin> distortion_histogram(const PointBuffer& points, const PairStore& pairs,
                                               int bins = 101);

// Probability that a random positive outranks a random negative, ties 0.5.
double auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg);

// rank is 1-based among the candidates.
int hr_at_k(int rank_of_target, int k);
double ndcg_at_k(int rank_of_target, int k);

}  // namespace mge
