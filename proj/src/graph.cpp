#include "mge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "mge/parallel.hpp"

namespace mge {

namespace {

long long checked_pow(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > (1LL << 40)) throw std::invalid_argument("tree size overflows a practical node count");
  }
  return r;
}

bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; static_cast<long long>(d) * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

long long mod_pow(long long b, long long e, long long m) {
  long long r = 1;
  b %= m;
  while (e > 0) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return r;
}

}  // namespace

Graph Graph::from_edges(int num_nodes, std::vector<Edge> edges) {
  if (num_nodes < 0) throw std::invalid_argument("num_nodes must be >= 0");
  for (auto& e : edges) {
    if (e.u < 0 || e.u >= num_nodes || e.v < 0 || e.v >= num_nodes)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("self-loops are not allowed");
    if (!(e.w > 0.0) || !std::isfinite(e.w))
      throw std::invalid_argument("edge weights must be strictly positive");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  // stable sort keeps the first-seen weight in front of duplicates
  std::vector<Edge> dedup;
  dedup.reserve(edges.size());
  for (const auto& e : edges) {
    if (!dedup.empty() && dedup.back().u == e.u && dedup.back().v == e.v) continue;
    dedup.push_back(e);
  }

  Graph g;
  g.num_nodes_ = num_nodes;
  g.edges_ = std::move(dedup);
  g.adj_.assign(num_nodes, {});
  g.unit_weights_ = true;
  for (const auto& e : g.edges_) {
    g.adj_[e.u].emplace_back(e.v, e.w);
    g.adj_[e.v].emplace_back(e.u, e.w);
    if (e.w != 1.0) g.unit_weights_ = false;
  }
  for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

Graph gen_tree(int branching, int height) {
  if (branching < 1) throw std::invalid_argument("gen_tree: branching must be >= 1");
  if (height < 0) throw std::invalid_argument("gen_tree: height must be >= 0");
  long long n;
  if (branching == 1) {
    n = height + 1;
  } else {
    n = (checked_pow(branching, height + 1) - 1) / (branching - 1);
  }
  // BFS ids follow heap indexing: children of i are b*i+1 .. b*i+b.
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  for (long long i = 0; i < n; ++i) {
    for (int j = 1; j <= branching; ++j) {
      const long long c = static_cast<long long>(branching) * i + j;
      if (c >= n) break;
      edges.push_back({static_cast<int>(i), static_cast<int>(c), 1.0});
    }
  }
  return Graph::from_edges(static_cast<int>(n), std::move(edges));
}

Graph gen_grid(const std::vector<int>& sides) {
  if (sides.empty()) throw std::invalid_argument("gen_grid: need at least one side");
  long long n = 1;
  for (int s : sides) {
    if (s < 2) throw std::invalid_argument("gen_grid: every side must be >= 2");
    n *= s;
    if (n > (1LL << 40)) throw std::invalid_argument("gen_grid: size overflow");
  }
  const int k = static_cast<int>(sides.size());
  std::vector<long long> stride(k);
  stride[k - 1] = 1;
  for (int d = k - 2; d >= 0; --d) stride[d] = stride[d + 1] * sides[d + 1];

  std::vector<Edge> edges;
  std::vector<int> coord(k, 0);
  for (long long idx = 0; idx < n; ++idx) {
    for (int d = 0; d < k; ++d) {
      if (coord[d] + 1 < sides[d])
        edges.push_back({static_cast<int>(idx), static_cast<int>(idx + stride[d]), 1.0});
    }
    for (int d = k - 1; d >= 0; --d) {
      if (++coord[d] < sides[d]) break;
      coord[d] = 0;
    }
  }
  return Graph::from_edges(static_cast<int>(n), std::move(edges));
}

Graph cartesian_product(const Graph& g1, const Graph& g2) {
  if (g1.num_nodes() == 0 || g2.num_nodes() == 0)
    throw std::invalid_argument("cartesian_product: both graphs must be non-empty");
  const int n2 = g2.num_nodes();
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(g1.num_edges()) * n2 +
                static_cast<std::size_t>(g2.num_edges()) * g1.num_nodes());
  for (const auto& e : g1.edges())
    for (int i2 = 0; i2 < n2; ++i2) edges.push_back({e.u * n2 + i2, e.v * n2 + i2, e.w});
  for (int i1 = 0; i1 < g1.num_nodes(); ++i1)
    for (const auto& e : g2.edges()) edges.push_back({i1 * n2 + e.u, i1 * n2 + e.v, e.w});
  return Graph::from_edges(g1.num_nodes() * n2, std::move(edges));
}

Graph rooted_product(const Graph& base, const Graph& fiber, int fiber_root) {
  if (base.num_nodes() == 0 || fiber.num_nodes() == 0)
    throw std::invalid_argument("rooted_product: both graphs must be non-empty");
  if (fiber_root < 0 || fiber_root >= fiber.num_nodes())
    throw std::invalid_argument("rooted_product: fiber_root out of range");
  const int nf = fiber.num_nodes();
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(base.num_edges()) +
                static_cast<std::size_t>(base.num_nodes()) * fiber.num_edges());
  for (const auto& e : base.edges())
    edges.push_back({e.u * nf + fiber_root, e.v * nf + fiber_root, e.w});
  for (int b = 0; b < base.num_nodes(); ++b)
    for (const auto& e : fiber.edges()) edges.push_back({b * nf + e.u, b * nf + e.v, e.w});
  return Graph::from_edges(base.num_nodes() * nf, std::move(edges));
}

Graph gen_margulis(int n) {
  if (n < 2) throw std::invalid_argument("gen_margulis: n must be >= 2");
  std::vector<Edge> edges;
  auto id = [n](long long x, long long y) {
    return static_cast<int>(((x % n + n) % n) * n + ((y % n + n) % n));
  };
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const int u = id(x, y);
      const long long nbrs[8][2] = {
          {x + 2LL * y, y},     {x - 2LL * y, y},     {x + 2LL * y + 1, y}, {x - 2LL * y - 1, y},
          {x, y + 2LL * x},     {x, y - 2LL * x},     {x, y + 2LL * x + 1}, {x, y - 2LL * x - 1},
      };
      for (const auto& nb : nbrs) {
        const int v = id(nb[0], nb[1]);
        if (v != u) edges.push_back({u, v, 1.0});
      }
    }
  }
  return Graph::from_edges(n * n, std::move(edges));
}

Graph gen_paley(int q) {
  if (!is_prime(q)) throw std::invalid_argument("gen_paley: q must be prime");
  if (q % 4 != 1) throw std::invalid_argument("gen_paley: q must satisfy q = 1 (mod 4)");
  std::vector<char> residue(q, 0);
  for (long long a = 1; a < q; ++a) residue[a * a % q] = 1;
  std::vector<Edge> edges;
  for (int a = 0; a < q; ++a)
    for (int b = a + 1; b < q; ++b)
      if (residue[(b - a) % q]) edges.push_back({a, b, 1.0});
  return Graph::from_edges(q, std::move(edges));
}

Graph gen_chordal_cycle(int p) {
  if (!is_prime(p)) throw std::invalid_argument("gen_chordal_cycle: p must be prime");
  std::vector<Edge> edges;
  for (int i = 0; i < p; ++i) edges.push_back({i, (i + 1) % p, 1.0});
  for (int i = 1; i < p; ++i) {
    const int inv = static_cast<int>(mod_pow(i, p - 2, p));
    if (inv != i) edges.push_back({i, inv, 1.0});
  }
  return Graph::from_edges(p, std::move(edges));
}

LoadedGraph load_edge_list(const std::string& path, bool weighted) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open '" + path + "'");

  std::unordered_map<std::string, int> ids;
  std::vector<std::string> tokens;
  std::vector<Edge> edges;

  auto intern = [&](const std::string& tok) {
    auto [it, inserted] = ids.emplace(tok, static_cast<int>(tokens.size()));
    if (inserted) tokens.push_back(tok);
    return it->second;
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tu, tv;
    if (!(ls >> tu >> tv))
      throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                               ": expected 'u v [w]'");
    double w = 1.0;
    std::string tw;
    if (ls >> tw) {
      if (weighted) {
        std::size_t pos = 0;
        try {
          w = std::stod(tw, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos != tw.size())
          throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                                   ": bad weight '" + tw + "'");
        if (!(w > 0.0))
          throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                                   ": weight must be > 0");
      }
      std::string extra;
      if (ls >> extra)
        throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                                 ": trailing tokens");
    }
    const int u = intern(tu);
    const int v = intern(tv);
    if (u == v)
      throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                               ": self-loop '" + tu + "'");
    edges.push_back({u, v, weighted ? w : 1.0});
  }

  LoadedGraph out;
  out.node_tokens = std::move(tokens);
  out.graph = Graph::from_edges(static_cast<int>(out.node_tokens.size()), std::move(edges));
  return out;
}

void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_edge_list: cannot open '" + path + "'");
  char buf[96];
  for (const auto& e : g.edges()) {
    if (g.unit_weights())
      std::snprintf(buf, sizeof(buf), "%d %d\n", e.u, e.v);
    else
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", e.u, e.v, e.w);
    out << buf;
  }
}

void write_nodes_tsv(const std::vector<std::string>& tokens, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_nodes_tsv: cannot open '" + path + "'");
  for (std::size_t i = 0; i < tokens.size(); ++i) out << tokens[i] << '\t' << i << '\n';
}

std::vector<double> single_source_distances(const Graph& g, int source) {
  const int n = g.num_nodes();
  std::vector<double> dist(n, -1.0);
  if (g.unit_weights()) {
    std::vector<int> queue;
    queue.reserve(n);
    queue.push_back(source);
    dist[source] = 0.0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (const auto& [v, w] : g.neighbors(u)) {
        (void)w;
        if (dist[v] < 0.0) {
          dist[v] = dist[u] + 1.0;
          queue.push_back(v);
        }
      }
    }
  } else {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : g.neighbors(u)) {
        const double nd = d + w;
        if (dist[v] < 0.0 || nd < dist[v]) {
          dist[v] = nd;
          heap.emplace(nd, v);
        }
      }
    }
  }
  return dist;
}

PairStore apsp(const Graph& g, int workers) {
  const int n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("apsp: empty graph");

  // Per-source result slots keep the merge deterministic regardless of the
  // thread schedule.
  std::vector<std::vector<Pair>> per_source(n);
  parallel_chunks(static_cast<std::size_t>(n), workers,
                  [&](int, std::size_t begin, std::size_t end) {
                    for (std::size_t s = begin; s < end; ++s) {
                      const int u = static_cast<int>(s);
                      const auto dist = single_source_distances(g, u);
                      auto& out = per_source[s];
                      for (int v = u + 1; v < n; ++v)
                        if (dist[v] > 0.0) out.push_back({u, v, dist[v]});
                    }
                  });

  PairStore store;
  std::size_t total = 0;
  for (const auto& part : per_source) total += part.size();
  store.pairs.reserve(total);
  for (auto& part : per_source)
    store.pairs.insert(store.pairs.end(), part.begin(), part.end());
  return store;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes() == 0) return true;
  const auto dist = single_source_distances(g, 0);
  for (double d : dist)
    if (d < 0.0) return false;
  return true;
}

}  // namespace mge
