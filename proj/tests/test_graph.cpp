#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "mge/graph.hpp"
#include "mge/rng.hpp"

using namespace mge;

namespace {

// O(n^3) oracle, implemented independently of the BFS/Dijkstra path.
std::vector<std::vector<double>> floyd_warshall(const Graph& g) {
  const int n = g.num_nodes();
  const double inf = 1e100;
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : g.edges()) d[e.u][e.v] = d[e.v][e.u] = std::min(d[e.u][e.v], e.w);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

Graph random_graph(Rng& rng, int n, double p, bool weighted) {
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.next_unit_open() < p)
        edges.push_back({u, v, weighted ? rng.next_in(0.1, 5.0) : 1.0});
  return Graph::from_edges(n, edges);
}

void check_simple(const Graph& g) {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges()) {
    CHECK(e.u >= 0);
    CHECK(e.v < g.num_nodes());
    CHECK(e.u < e.v);
    CHECK(e.w > 0.0);
    CHECK(seen.emplace(e.u, e.v).second);
  }
}

std::string temp_file(const std::string& name) {
  return std::string("/tmp/mge_test_") + name;
}

}  // namespace

TEST_CASE("gen_tree counts and shapes") {
  const auto t35 = gen_tree(3, 5);
  CHECK(t35.num_nodes() == 364);
  CHECK(t35.num_edges() == 363);
  check_simple(t35);

  const auto t23 = gen_tree(2, 3);
  CHECK(t23.num_nodes() == 15);
  CHECK(t23.num_edges() == 14);

  // branching 1 degenerates to a path
  const auto path = gen_tree(1, 4);
  CHECK(path.num_nodes() == 5);
  CHECK(path.num_edges() == 4);
  CHECK(path.degree(0) == 1);
  CHECK(path.degree(2) == 2);
  CHECK(path.degree(4) == 1);

  CHECK(gen_tree(3, 0).num_nodes() == 1);
  CHECK_THROWS_AS(gen_tree(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(gen_tree(2, -1), std::invalid_argument);
}

TEST_CASE("gen_tree BFS ordering: children of i are b*i+1..b*i+b") {
  const auto t = gen_tree(3, 2);
  std::set<std::pair<int, int>> edges;
  for (const auto& e : t.edges()) edges.emplace(e.u, e.v);
  CHECK(edges.count({0, 1}) == 1);
  CHECK(edges.count({0, 3}) == 1);
  CHECK(edges.count({1, 4}) == 1);
  CHECK(edges.count({1, 6}) == 1);
  CHECK(edges.count({4, 5}) == 0);
}

TEST_CASE("gen_grid counts") {
  const auto g4 = gen_grid({5, 5, 5, 5});
  CHECK(g4.num_nodes() == 625);
  CHECK(g4.num_edges() == 2000);
  check_simple(g4);

  const auto c4 = gen_grid({2, 2});
  CHECK(c4.num_nodes() == 4);
  CHECK(c4.num_edges() == 4);
  for (int i = 0; i < 4; ++i) CHECK(c4.degree(i) == 2);

  // edge formula: sum_i (s_i - 1) * prod_{j != i} s_j
  const auto g2 = gen_grid({5, 5});
  CHECK(g2.num_nodes() == 25);
  CHECK(g2.num_edges() == 40);

  CHECK_THROWS_AS(gen_grid({1, 5}), std::invalid_argument);
  CHECK_THROWS_AS(gen_grid({}), std::invalid_argument);
}

TEST_CASE("cartesian product") {
  const auto t = gen_tree(2, 3);
  const auto prod = cartesian_product(t, t);
  CHECK(prod.num_nodes() == 225);
  CHECK(prod.num_edges() == 420);
  check_simple(prod);

  // |E| = |V1||E2| + |V2||E1| on random instances
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const auto a = random_graph(rng, 6, 0.4, false);
    const auto b = random_graph(rng, 5, 0.5, false);
    const auto p = cartesian_product(a, b);
    CHECK(p.num_edges() == a.num_nodes() * b.num_edges() + b.num_nodes() * a.num_edges());
    check_simple(p);
  }

  // identity factor
  const auto k1 = Graph::from_edges(1, {});
  const auto same = cartesian_product(t, k1);
  CHECK(same.num_nodes() == t.num_nodes());
  CHECK(same.num_edges() == t.num_edges());

  // P2 x P2 = 4-cycle
  const auto p2 = gen_tree(1, 1);
  const auto sq = cartesian_product(p2, p2);
  CHECK(sq.num_nodes() == 4);
  CHECK(sq.num_edges() == 4);
}

TEST_CASE("rooted product") {
  const auto tg = rooted_product(gen_tree(2, 4), gen_grid({5, 5}), 0);
  CHECK(tg.num_nodes() == 775);
  CHECK(tg.num_edges() == 1270);
  check_simple(tg);

  const auto gt = rooted_product(gen_grid({5, 5}), gen_tree(2, 4), 0);
  CHECK(gt.num_nodes() == 775);
  CHECK(gt.num_edges() == 790);

  const auto base = gen_tree(2, 2);
  const auto k1 = Graph::from_edges(1, {});
  const auto same = rooted_product(base, k1, 0);
  CHECK(same.num_nodes() == base.num_nodes());
  CHECK(same.num_edges() == base.num_edges());

  CHECK_THROWS_AS(rooted_product(base, k1, 3), std::invalid_argument);
}

TEST_CASE("margulis generator vs brute-force rule expansion") {
  // independent expansion of the 8 generator rules over a pair set
  auto brute_count = [](int n) {
    std::set<std::pair<int, int>> edges;
    auto idx = [n](int x, int y) { return ((x % n + n) % n) * n + ((y % n + n) % n); };
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        const int u = idx(x, y);
        for (int v : {idx(x + 2 * y, y), idx(x - 2 * y, y), idx(x + 2 * y + 1, y),
                      idx(x - 2 * y - 1, y), idx(x, y + 2 * x), idx(x, y - 2 * x),
                      idx(x, y + 2 * x + 1), idx(x, y - 2 * x - 1)}) {
          if (v == u) continue;
          edges.emplace(std::min(u, v), std::max(u, v));
        }
      }
    return edges.size();
  };

  for (int n : {2, 3, 5, 8}) {
    const auto g = gen_margulis(n);
    CHECK(g.num_nodes() == n * n);
    CHECK(static_cast<std::size_t>(g.num_edges()) == brute_count(n));
    check_simple(g);
  }

  const auto g25 = gen_margulis(25);
  CHECK(g25.num_nodes() == 625);
  // Dedup of the 8 neighbor rules gives 2350 simple edges; the multigraph
  // form (4 directed generators incl. loops/parallels) has 2500.
  CHECK(static_cast<std::size_t>(g25.num_edges()) == brute_count(25));
  CHECK(g25.num_edges() == 2350);
  CHECK(is_connected(g25));
}

TEST_CASE("paley graphs") {
  // Paley(5) is the 5-cycle
  const auto p5 = gen_paley(5);
  CHECK(p5.num_nodes() == 5);
  CHECK(p5.num_edges() == 5);
  for (int i = 0; i < 5; ++i) CHECK(p5.degree(i) == 2);

  // residue-set enumeration: Paley(13) is 6-regular
  const auto p13 = gen_paley(13);
  CHECK(p13.num_edges() == 39);
  for (int i = 0; i < 13; ++i) CHECK(p13.degree(i) == 6);

  // q(q-1)/4 edges; the standard construction (cf. open question on the
  // published 5050 figure, which equals C(101,2))
  const auto p101 = gen_paley(101);
  CHECK(p101.num_nodes() == 101);
  CHECK(p101.num_edges() == 2525);

  CHECK_THROWS_AS(gen_paley(9), std::invalid_argument);   // not prime
  CHECK_THROWS_AS(gen_paley(7), std::invalid_argument);   // 7 = 3 mod 4
}

TEST_CASE("chordal cycle") {
  const auto c3 = gen_chordal_cycle(3);
  CHECK(c3.num_nodes() == 3);
  CHECK(c3.num_edges() == 3);

  // brute-force modular-inverse table for p = 7
  const auto c7 = gen_chordal_cycle(7);
  std::set<std::pair<int, int>> expect;
  for (int i = 0; i < 7; ++i) expect.emplace(std::min(i, (i + 1) % 7), std::max(i, (i + 1) % 7));
  for (int i = 1; i < 7; ++i)
    for (int j = 1; j < 7; ++j)
      if (i * j % 7 == 1 && i != j) expect.emplace(std::min(i, j), std::max(i, j));
  std::set<std::pair<int, int>> got;
  for (const auto& e : c7.edges()) got.emplace(e.u, e.v);
  CHECK(got == expect);

  for (int p : {3, 7, 11, 13}) {
    const auto g = gen_chordal_cycle(p);
    for (int i = 0; i < p; ++i) CHECK(g.degree(i) <= 4);
    check_simple(g);
  }
  CHECK_THROWS_AS(gen_chordal_cycle(8), std::invalid_argument);
}

TEST_CASE("edge list files") {
  const auto path = temp_file("tri.edges");
  {
    std::ofstream out(path);
    out << "# a triangle\n0 1\n1 2\n2 0\n";
  }
  const auto tri = load_edge_list(path, false);
  CHECK(tri.graph.num_nodes() == 3);
  CHECK(tri.graph.num_edges() == 3);
  CHECK(tri.node_tokens == std::vector<std::string>{"0", "1", "2"});

  const auto wpath = temp_file("w.edges");
  {
    std::ofstream out(wpath);
    out << "a b 2.5\n";
  }
  const auto w = load_edge_list(wpath, true);
  CHECK(w.graph.num_edges() == 1);
  CHECK(w.graph.edges()[0].w == 2.5);
  // unweighted read ignores the third column
  CHECK(load_edge_list(wpath, false).graph.edges()[0].w == 1.0);

  const auto bad = temp_file("bad.edges");
  {
    std::ofstream out(bad);
    out << "0 1\nonly_one_token\n";
  }
  CHECK_THROWS_WITH_AS(load_edge_list(bad, false), doctest::Contains(":2"), std::runtime_error);

  {
    std::ofstream out(bad);
    out << "0 1 -3.0\n";
  }
  CHECK_THROWS_AS(load_edge_list(bad, true), std::runtime_error);

  // duplicate edges keep the first weight; first-appearance compaction
  const auto dup = temp_file("dup.edges");
  {
    std::ofstream out(dup);
    out << "x y 2.0\ny x 9.0\ny z 1.5\n";
  }
  const auto d = load_edge_list(dup, true);
  CHECK(d.graph.num_edges() == 2);
  CHECK(d.node_tokens == std::vector<std::string>{"x", "y", "z"});
  CHECK(d.graph.edges()[0].w == 2.0);

  // round-trip through write_edge_list
  const auto out_path = temp_file("rt.edges");
  write_edge_list(d.graph, out_path);
  const auto rt = load_edge_list(out_path, true);
  CHECK(rt.graph.num_edges() == d.graph.num_edges());
  CHECK(rt.graph.edges()[0].w == 2.0);

  write_nodes_tsv(d.node_tokens, out_path + ".nodes.tsv");
  std::ifstream check_in(out_path + ".nodes.tsv");
  std::string line;
  std::getline(check_in, line);
  CHECK(line == "x\t0");
}

TEST_CASE("graph construction validation") {
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 2, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 1, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 1, -1.0}}), std::invalid_argument);
}

TEST_CASE("apsp simple cases") {
  const auto p3 = gen_tree(1, 2);
  const auto ps = apsp(p3);
  CHECK(ps.size() == 3);
  double d02 = -1;
  for (const auto& p : ps.pairs)
    if (p.u == 0 && p.v == 2) d02 = p.dist;
  CHECK(d02 == 2.0);

  // grid corner to corner is the Manhattan count
  const auto g = gen_grid({5, 5});
  const auto gs = apsp(g);
  double corner = -1;
  for (const auto& p : gs.pairs)
    if (p.u == 0 && p.v == 24) corner = p.dist;
  CHECK(corner == 8.0);
}

TEST_CASE("apsp equals Floyd-Warshall on random graphs") {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(48));
    const bool weighted = trial % 2 == 1;
    const auto g = random_graph(rng, n, 0.15, weighted);
    if (g.num_edges() == 0) continue;
    const auto fw = floyd_warshall(g);
    const auto ps = apsp(g, trial % 3 + 1);

    std::size_t expected_pairs = 0;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (fw[u][v] < 1e99) ++expected_pairs;
    CHECK(ps.size() == expected_pairs);
    for (const auto& p : ps.pairs) {
      CHECK(p.u < p.v);
      CHECK(p.dist == doctest::Approx(fw[p.u][p.v]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pair counts match table stats for the five synthetic graphs") {
  CHECK(apsp(gen_tree(3, 5), 2).size() == 66066);
  CHECK(apsp(gen_grid({5, 5, 5, 5}), 2).size() == 195000);
  const auto t23 = gen_tree(2, 3);
  CHECK(apsp(cartesian_product(t23, t23), 2).size() == 25200);
  CHECK(apsp(rooted_product(gen_tree(2, 4), gen_grid({5, 5}), 0), 2).size() == 299925);
  CHECK(apsp(rooted_product(gen_grid({5, 5}), gen_tree(2, 4), 0), 2).size() == 299925);
}

TEST_CASE("apsp triangle inequality on sampled triples") {
  Rng rng(3);
  const auto g = random_graph(rng, 30, 0.2, true);
  const auto ps = apsp(g);
  std::vector<std::vector<double>> d(30, std::vector<double>(30, -1.0));
  for (const auto& p : ps.pairs) d[p.u][p.v] = d[p.v][p.u] = p.dist;
  for (int i = 0; i < 30; ++i) d[i][i] = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const int a = static_cast<int>(rng.next_below(30));
    const int b = static_cast<int>(rng.next_below(30));
    const int c = static_cast<int>(rng.next_below(30));
    if (d[a][b] < 0 || d[b][c] < 0 || d[a][c] < 0) continue;
    CHECK(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
  }
}

TEST_CASE("apsp deterministic across worker counts for unit weights") {
  const auto g = gen_tree(3, 4);
  const auto a = apsp(g, 1);
  const auto b = apsp(g, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.pairs[i].u == b.pairs[i].u);
    CHECK(a.pairs[i].v == b.pairs[i].v);
    CHECK(a.pairs[i].dist == b.pairs[i].dist);
  }
}

TEST_CASE("disconnected graphs omit unreachable pairs") {
  const auto g = Graph::from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  const auto ps = apsp(g);
  CHECK(ps.size() == 2);
  CHECK_FALSE(is_connected(g));
}
