#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mge {

struct Edge {
  int u = 0;
  int v = 0;
  double w = 1.0;
};

// Undirected weighted graph with contiguous 0-based node ids. Immutable after
// construction; safe to share across threads.
class Graph {
 public:
  Graph() = default;

  // Validates ids and weights; self-loops and non-positive weights throw.
  // Duplicate undirected edges collapse, keeping the first weight seen.
  static Graph from_edges(int num_nodes, std::vector<Edge> edges);

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Neighbors of u as (node, weight), sorted by node id.
  const std::vector<std::pair<int, double>>& neighbors(int u) const { return adj_[u]; }
  int degree(int u) const { return static_cast<int>(adj_[u].size()); }

  bool unit_weights() const { return unit_weights_; }

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;  // canonical form: u < v, sorted, deduplicated
  std::vector<std::vector<std::pair<int, double>>> adj_;
  bool unit_weights_ = true;
};

// One entry per unordered connected pair, u < v, dist > 0.
struct Pair {
  int u = 0;
  int v = 0;
  double dist = 0.0;
};

struct PairStore {
  std::vector<Pair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// ---- Generators ------------------------------------------------------------

// Full rooted tree: every non-leaf has `branching` children, node 0 is the
// root, ids in BFS order.
Graph gen_tree(int branching, int height);

// Axis-aligned lattice; nodes in row-major order, edges between nodes that
// differ by 1 in exactly one coordinate.
Graph gen_grid(const std::vector<int>& sides);

// Cartesian graph product; node (i1, i2) gets id i1*|V2| + i2.
Graph cartesian_product(const Graph& g1, const Graph& g2);

// Rooted product: one fiber copy per base node, the copy's `fiber_root`
// identified with the base node. Node (b, f) gets id b*|V_fiber| + f.
Graph rooted_product(const Graph& base, const Graph& fiber, int fiber_root);

// Margulis-Gabber-Galil expander on Z_n x Z_n: (x,y) is adjacent to
// (x +- 2y, y), (x +- (2y+1), y), (x, y +- 2x), (x, y +- (2x+1)) mod n,
// reduced to a simple graph. Node (x, y) gets id x*n + y.
Graph gen_margulis(int n);

// Paley graph on a prime q = 1 (mod 4): {a, b} is an edge iff a - b is a
// nonzero quadratic residue mod q.
Graph gen_paley(int q);

// Chordal cycle on a prime p: cycle edges {i, i+1 mod p} plus the chord
// {i, i^-1 mod p} for i >= 1, reduced to a simple graph.
Graph gen_chordal_cycle(int p);

// ---- Edge-list files -------------------------------------------------------

struct LoadedGraph {
  Graph graph;
  // token for each compacted node id, in first-appearance order
  std::vector<std::string> node_tokens;
};

// Reads "u v [w]" lines (whitespace-separated, '#' comments ignored). Node
// tokens may be arbitrary strings; ids are compacted to 0..n-1 preserving
// first-appearance order. Duplicate edges keep the first weight. Throws with
// the offending line number on malformed input; rejects w <= 0.
LoadedGraph load_edge_list(const std::string& path, bool weighted);

// Writes `u v [w]` lines; weights are emitted when the graph is weighted.
void write_edge_list(const Graph& g, const std::string& path);

// Writes the compaction map as "token \t id" lines.
void write_nodes_tsv(const std::vector<std::string>& tokens, const std::string& path);

// ---- Shortest paths --------------------------------------------------------

// Exact shortest-path distance for every connected unordered pair (u < v,
// sorted by (u, v)). BFS per source on unit-weight graphs, Dijkstra
// otherwise; sources are processed in parallel and merged in node order.
PairStore apsp(const Graph& g, int workers = 1);

// Distances from a single source; unreachable nodes get -1.
std::vector<double> single_source_distances(const Graph& g, int source);

bool is_connected(const Graph& g);

}  // namespace mge
