#include "mge/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mge::bench {

namespace fs = std::filesystem;

namespace {

// ---- generator expression parser -------------------------------------------

struct ExprParser {
  const std::string& text;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("generator expr: " + msg + " at position " + std::to_string(pos) +
                                " in '" + text + "'");
  }

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < text.size() && (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected a generator name");
    return text.substr(start, pos - start);
  }

  long number() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected an integer");
    return std::stol(text.substr(start, pos - start));
  }

  Graph parse() {
    const auto name = ident();
    expect('(');
    Graph g;
    if (name == "tree") {
      const long b = number();
      expect(',');
      const long h = number();
      g = gen_tree(static_cast<int>(b), static_cast<int>(h));
    } else if (name == "grid") {
      std::vector<int> sides{static_cast<int>(number())};
      while (consume(',')) sides.push_back(static_cast<int>(number()));
      g = gen_grid(sides);
    } else if (name == "cartesian") {
      Graph a = parse();
      expect(',');
      Graph b = parse();
      g = cartesian_product(a, b);
    } else if (name == "rooted") {
      Graph base = parse();
      expect(',');
      Graph fiber = parse();
      int root = 0;
      if (consume(',')) root = static_cast<int>(number());
      g = rooted_product(base, fiber, root);
    } else if (name == "margulis") {
      g = gen_margulis(static_cast<int>(number()));
    } else if (name == "paley") {
      g = gen_paley(static_cast<int>(number()));
    } else if (name == "chordal") {
      g = gen_chordal_cycle(static_cast<int>(number()));
    } else {
      fail("unknown generator '" + name +
           "' (expected tree, grid, cartesian, rooted, margulis, paley, chordal)");
    }
    expect(')');
    return g;
  }
};

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',') c = 'x';
  return s;
}

std::string space_file_tag(const SpaceSpec& spec) {
  std::string s = spec.to_string();
  for (char& c : s) {
    if (c == ':') c = '_';
    if (c == '*') c = 'x';
    if (c == '-') c = 'm';
    if (c == '.') c = 'p';
  }
  return s;
}

std::string fmt(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

// Work queue over independent run descriptors; results land in caller-indexed
// slots so output order never depends on scheduling.
void run_pool(std::size_t jobs, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || jobs <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto loop = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) break;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(jobs));
  for (int w = 0; w < count; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

}  // namespace

Graph parse_generator_expr(const std::string& expr) {
  ExprParser p{expr};
  Graph g = p.parse();
  p.skip_ws();
  if (p.pos != expr.size()) p.fail("trailing characters");
  return g;
}

GraphSource resolve_graph_source(const std::string& source, bool weighted) {
  GraphSource out;
  if (source.find('(') != std::string::npos) {
    out.graph = parse_generator_expr(source);
    out.name = csv_safe(source);
  } else {
    out.graph = load_edge_list(source, weighted).graph;
    out.name = csv_safe(fs::path(source).stem().string());
  }
  return out;
}

// ---- CSV -------------------------------------------------------------------

void write_csv(const Csv& csv, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
  for (std::size_t i = 0; i < csv.header.size(); ++i)
    out << (i ? "," : "") << csv.header[i];
  out << '\n';
  for (const auto& row : csv.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      csv.header = std::move(fields);
      first = false;
    } else {
      csv.rows.push_back(std::move(fields));
    }
  }
  return csv;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

// ---- SVG -------------------------------------------------------------------

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 80;
constexpr int kMarginRight = 170;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Scale {
  double lo = 0.0, hi = 1.0;
  int p0 = 0, p1 = 1;
  bool log = false;

  double map(double v) const {
    double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                   : (v - lo) / (hi - lo);
    return p0 + t * (p1 - p0);
  }
};

void svg_header(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
}

void svg_axes(std::ofstream& out, const Scale& xs, const Scale& ys, const std::string& xlabel,
              const std::string& ylabel) {
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xs.log ? std::pow(10.0, std::log10(xs.lo) +
                                                  i * (std::log10(xs.hi) - std::log10(xs.lo)) / 4)
                             : xs.lo + i * (xs.hi - xs.lo) / 4;
    const double yv = ys.log ? std::pow(10.0, std::log10(ys.lo) +
                                                  i * (std::log10(ys.hi) - std::log10(ys.lo)) / 4)
                             : ys.lo + i * (ys.hi - ys.lo) / 4;
    out << "<text x=\"" << xs.map(xv) << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv, "%.4g") << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << ys.map(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv, "%.4g") << "</text>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << ys.map(yv) << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << ys.map(yv)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
  out << "<text x=\"20\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
      << (kMarginTop + kHeight - kMarginBottom) / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<Series>& series, bool log_y) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_line_svg: cannot open '" + path + "'");

  double xlo = 0.0, xhi = 1.0, ylo = log_y ? 1e-12 : 0.0, yhi = 1.0;
  bool have = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (log_y && y <= 0.0) continue;
      if (!have) {
        xlo = xhi = x;
        ylo = yhi = y;
        have = true;
      } else {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
      }
    }
  if (xhi <= xlo) xhi = xlo + 1.0;
  if (yhi <= ylo) yhi = ylo + (log_y ? ylo * 9.0 + 1e-12 : 1.0);

  Scale xs{xlo, xhi, kMarginLeft, kWidth - kMarginRight, false};
  Scale ys{ylo, yhi, kHeight - kMarginBottom, kMarginTop, log_y};

  svg_header(out, title);
  svg_axes(out, xs, ys, xlabel, ylabel);

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) {
      if (log_y && y <= 0.0) continue;
      out << fmt(xs.map(x), "%.2f") << ',' << fmt(ys.map(y), "%.2f") << ' ';
    }
    out << "\"/>\n";
    const int ly = kMarginTop + 18 * ci;
    out << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kMarginRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 36 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << s.name << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<HistogramBin>& bins) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_histogram_svg: cannot open '" + path + "'");
  double xlo = bins.front().lo, xhi = bins.back().hi;
  if (xhi <= xlo) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  long long max_count = 1;
  for (const auto& b : bins) max_count = std::max(max_count, b.count);

  Scale xs{xlo, xhi, kMarginLeft, kWidth - kMarginRight, false};
  Scale ys{0.0, static_cast<double>(max_count), kHeight - kMarginBottom, kMarginTop, false};

  svg_header(out, title);
  svg_axes(out, xs, ys, "distortion", "pairs");
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const double x0 = xs.map(b.lo);
    const double x1 = b.hi > b.lo ? xs.map(b.hi) : x0 + 2.0;
    const double y = ys.map(static_cast<double>(b.count));
    out << "<rect x=\"" << fmt(x0, "%.2f") << "\" y=\"" << fmt(y, "%.2f") << "\" width=\""
        << fmt(std::max(x1 - x0, 1.0), "%.2f") << "\" height=\""
        << fmt(kHeight - kMarginBottom - y, "%.2f") << "\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
}

// ---- Commands ----------------------------------------------------------------

GenerateResult cmd_generate(const std::string& expr, const std::string& out_path) {
  Graph g = parse_generator_expr(expr);
  write_edge_list(g, out_path);
  std::vector<std::string> tokens(static_cast<std::size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i) tokens[static_cast<std::size_t>(i)] = std::to_string(i);
  write_nodes_tsv(tokens, out_path + ".nodes.tsv");
  return {g.num_nodes(), g.num_edges()};
}

int cmd_reconstruct(const ExperimentPlan& plan) {
  if (plan.spaces.empty() || plan.seeds.empty())
    throw std::invalid_argument("cmd_reconstruct: need at least one space and one seed");
  ensure_dir(plan.out_dir);
  const auto source = resolve_graph_source(plan.graph_source, plan.weighted);
  const auto pairs = apsp(source.graph, plan.pool_workers);

  struct RunSlot {
    bool ok = false;
    std::string error;
    RunReport report;
    double map = -1.0;
    PointBuffer points;
  };
  const std::size_t n_runs = plan.spaces.size() * plan.seeds.size();
  std::vector<RunSlot> slots(n_runs);

  // The grid points of one (space, seed) run in the pool; (space, seed)
  // combinations proceed serially so memory stays bounded.
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    for (std::size_t ki = 0; ki < plan.seeds.size(); ++ki) {
      auto& slot = slots[si * plan.seeds.size() + ki];
      TrainConfig base = plan.base;
      base.seed = plan.seeds[ki];
      try {
        auto result = grid_search(pairs, plan.spaces[si], plan.grids, base,
                                  source.graph.num_nodes(), plan.pool_workers);
        slot.ok = true;
        slot.report = std::move(result.report);
        slot.points = std::move(result.points);
        if (source.graph.unit_weights())
          slot.map = map_score(slot.points, source.graph, plan.pool_workers);
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  }

  Csv runs;
  runs.header = {"graph", "space",       "seed",      "d_avg_pct",
                 "map_pct", "wall_time_s", "best_epoch", "status"};
  int n_ok = 0;
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    for (std::size_t ki = 0; ki < plan.seeds.size(); ++ki) {
      const auto& slot = slots[si * plan.seeds.size() + ki];
      std::vector<std::string> row{source.name, plan.spaces[si].to_string(),
                                   std::to_string(plan.seeds[ki])};
      if (slot.ok) {
        ++n_ok;
        row.push_back(fmt(slot.report.final_d_avg * 100.0, "%.6g"));
        row.push_back(slot.map >= 0.0 ? fmt(slot.map * 100.0, "%.6g") : "");
        row.push_back(fmt(slot.report.wall_time_seconds, "%.3f"));
        row.push_back(std::to_string(slot.report.best_epoch));
        row.push_back("ok");
      } else {
        row.insert(row.end(), {"", "", "", "", "failed"});
      }
      runs.rows.push_back(std::move(row));
    }
  }
  write_csv(runs, plan.out_dir + "/runs.csv");

  Csv summary;
  summary.header = {"graph",        "space",        "runs_ok",      "d_avg_pct_mean",
                    "d_avg_pct_std", "map_pct_mean", "map_pct_std"};
  std::vector<Series> loss_series;
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    std::vector<double> davgs, maps;
    const RunSlot* best = nullptr;
    for (std::size_t ki = 0; ki < plan.seeds.size(); ++ki) {
      const auto& slot = slots[si * plan.seeds.size() + ki];
      if (!slot.ok) continue;
      davgs.push_back(slot.report.final_d_avg * 100.0);
      if (slot.map >= 0.0) maps.push_back(slot.map * 100.0);
      if (!best || slot.report.final_d_avg < best->report.final_d_avg) best = &slot;
    }
    const auto [dm, ds] = mean_std(davgs);
    const auto [mm, ms] = mean_std(maps);
    summary.rows.push_back({source.name, plan.spaces[si].to_string(),
                            std::to_string(davgs.size()), fmt(dm), fmt(ds),
                            maps.empty() ? "" : fmt(mm), maps.empty() ? "" : fmt(ms)});
    if (best) {
      Series s;
      s.name = plan.spaces[si].to_string();
      for (const auto& [epoch, loss] : best->report.loss_curve)
        s.points.emplace_back(static_cast<double>(epoch), loss);
      loss_series.push_back(std::move(s));

      const auto bins = distortion_histogram(best->points, pairs);
      const std::string tag = space_file_tag(plan.spaces[si]);
      Csv hist;
      hist.header = {"bin_low", "bin_high", "count"};
      for (const auto& b : bins)
        hist.rows.push_back({fmt(b.lo, "%.9g"), fmt(b.hi, "%.9g"), std::to_string(b.count)});
      write_csv(hist, plan.out_dir + "/histogram_" + tag + ".csv");
      write_histogram_svg(plan.out_dir + "/histogram_" + tag + ".svg",
                          source.name + " distortions, " + plan.spaces[si].to_string(), bins);
      write_embedding(best->points, plan.out_dir + "/embedding_" + tag + ".txt");
      write_run_report(best->report, plan.out_dir + "/best_" + tag + ".report.json");
    }
  }
  write_csv(summary, plan.out_dir + "/summary.csv");
  if (!loss_series.empty())
    write_line_svg(plan.out_dir + "/loss_curves.svg", source.name + " training loss", "epoch",
                   "loss", loss_series, /*log_y=*/true);
  return n_ok;
}

int cmd_capacity(const CapacityPlan& plan) {
  if (plan.sizes.empty()) throw std::invalid_argument("cmd_capacity: empty size range");
  if (plan.spaces.empty()) throw std::invalid_argument("cmd_capacity: need at least one space");
  ensure_dir(plan.out_dir);

  struct Job {
    int graph_idx = 0;
    std::size_t space = 0;
    std::uint64_t seed = 0;
  };
  std::vector<Job> jobs;
  std::vector<GraphSource> sources;
  std::vector<PairStore> stores;
  for (int size : plan.sizes) {
    GraphSource src;
    if (plan.family == "tree") {
      src.graph = gen_tree(3, size);
      src.name = "tree(3x" + std::to_string(size) + ")";
    } else if (plan.family == "grid") {
      src.graph = gen_grid({size, size, size, size});
      src.name = "grid4d(" + std::to_string(size) + ")";
    } else if (plan.family == "fullerene") {
      const std::string path = plan.data_dir + "/fullerene_" + std::to_string(size) + ".edges";
      src.graph = load_edge_list(path, false).graph;
      src.name = "fullerene_" + std::to_string(size);
    } else {
      throw std::invalid_argument("cmd_capacity: unknown family '" + plan.family +
                                  "' (expected tree, grid, fullerene)");
    }
    stores.push_back(apsp(src.graph, plan.pool_workers));
    sources.push_back(std::move(src));
  }
  for (std::size_t gi = 0; gi < sources.size(); ++gi)
    for (std::size_t si = 0; si < plan.spaces.size(); ++si)
      for (const auto seed : plan.seeds) jobs.push_back({static_cast<int>(gi), si, seed});

  struct Slot {
    bool ok = false;
    std::string error;
    double d_avg = 0.0;
    double seconds = 0.0;
  };
  std::vector<Slot> slots(jobs.size());
  run_pool(jobs.size(), plan.pool_workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    TrainConfig cfg = plan.base;
    cfg.seed = job.seed;
    try {
      auto r = train(stores[static_cast<std::size_t>(job.graph_idx)], plan.spaces[job.space], cfg,
                     sources[static_cast<std::size_t>(job.graph_idx)].graph.num_nodes());
      slots[i].ok = true;
      slots[i].d_avg = r.report.final_d_avg;
      slots[i].seconds = r.report.wall_time_seconds;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  Csv runs;
  runs.header = {"family", "size",       "graph", "nodes",      "space",
                 "seed",   "d_avg_pct", "wall_time_s", "status"};
  int n_ok = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& src = sources[static_cast<std::size_t>(job.graph_idx)];
    std::vector<std::string> row{plan.family,
                                 std::to_string(plan.sizes[static_cast<std::size_t>(job.graph_idx)]),
                                 src.name,
                                 std::to_string(src.graph.num_nodes()),
                                 plan.spaces[job.space].to_string(),
                                 std::to_string(job.seed)};
    if (slots[i].ok) {
      ++n_ok;
      row.push_back(fmt(slots[i].d_avg * 100.0));
      row.push_back(fmt(slots[i].seconds, "%.3f"));
      row.push_back("ok");
    } else {
      row.insert(row.end(), {"", "", "failed"});
    }
    runs.rows.push_back(std::move(row));
  }
  write_csv(runs, plan.out_dir + "/capacity_runs.csv");

  Csv summary;
  summary.header = {"family", "size", "nodes", "space", "d_avg_pct_mean", "d_avg_pct_std",
                    "wall_time_s_mean"};
  std::vector<Series> davg_series(plan.spaces.size()), time_series(plan.spaces.size());
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    davg_series[si].name = time_series[si].name = plan.spaces[si].to_string();
    for (std::size_t gi = 0; gi < sources.size(); ++gi) {
      std::vector<double> davgs, times;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].space != si || static_cast<std::size_t>(jobs[i].graph_idx) != gi || !slots[i].ok)
          continue;
        davgs.push_back(slots[i].d_avg * 100.0);
        times.push_back(slots[i].seconds);
      }
      if (davgs.empty()) continue;
      const auto [dm, ds] = mean_std(davgs);
      const auto [tm, ts] = mean_std(times);
      (void)ts;
      summary.rows.push_back({plan.family, std::to_string(plan.sizes[gi]),
                              std::to_string(sources[gi].graph.num_nodes()),
                              plan.spaces[si].to_string(), fmt(dm), fmt(ds), fmt(tm, "%.3f")});
      davg_series[si].points.emplace_back(static_cast<double>(sources[gi].graph.num_nodes()), dm);
      time_series[si].points.emplace_back(static_cast<double>(sources[gi].graph.num_nodes()), tm);
    }
  }
  write_csv(summary, plan.out_dir + "/capacity_summary.csv");
  write_line_svg(plan.out_dir + "/capacity_davg.svg", plan.family + " capacity", "nodes",
                 "D_avg (%)", davg_series, false);
  write_line_svg(plan.out_dir + "/capacity_time.svg", plan.family + " training time", "nodes",
                 "seconds", time_series, false);
  return n_ok;
}

int cmd_recsys(const RecsysPlan& plan) {
  if (plan.spaces.empty() || plan.seeds.empty())
    throw std::invalid_argument("cmd_recsys: need at least one space and one seed");
  ensure_dir(plan.out_dir);
  const auto data = InteractionSet::load(plan.dataset_path);
  const std::string dataset = csv_safe(fs::path(plan.dataset_path).stem().string());

  struct Slot {
    bool ok = false;
    std::string error;
    RecsysMetrics metrics;
  };
  const std::size_t n_runs = plan.spaces.size() * plan.seeds.size();
  std::vector<Slot> slots(n_runs);
  run_pool(n_runs, plan.pool_workers, [&](std::size_t i) {
    const auto& spec = plan.spaces[i / plan.seeds.size()];
    TrainConfig cfg = plan.base;
    cfg.seed = plan.seeds[i % plan.seeds.size()];
    try {
      auto [model, metrics] = train_recsys(data, spec, cfg, plan.loss, plan.margin);
      slots[i].ok = true;
      slots[i].metrics = metrics;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  Csv runs;
  runs.header = {"dataset", "space", "seed", "hr10", "ndcg10", "status"};
  int n_ok = 0;
  for (std::size_t i = 0; i < n_runs; ++i) {
    const auto& spec = plan.spaces[i / plan.seeds.size()];
    std::vector<std::string> row{dataset, spec.to_string(),
                                 std::to_string(plan.seeds[i % plan.seeds.size()])};
    if (slots[i].ok) {
      ++n_ok;
      row.push_back(fmt(slots[i].metrics.hr10 * 100.0));
      row.push_back(fmt(slots[i].metrics.ndcg10 * 100.0));
      row.push_back("ok");
    } else {
      row.insert(row.end(), {"", "", "failed"});
    }
    runs.rows.push_back(std::move(row));
  }
  write_csv(runs, plan.out_dir + "/recsys_runs.csv");

  Csv summary;
  summary.header = {"dataset", "space", "runs_ok", "hr10_mean", "hr10_std", "ndcg10_mean",
                    "ndcg10_std"};
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    std::vector<double> hrs, ndcgs;
    for (std::size_t ki = 0; ki < plan.seeds.size(); ++ki) {
      const auto& slot = slots[si * plan.seeds.size() + ki];
      if (!slot.ok) continue;
      hrs.push_back(slot.metrics.hr10 * 100.0);
      ndcgs.push_back(slot.metrics.ndcg10 * 100.0);
    }
    const auto [hm, hs] = mean_std(hrs);
    const auto [nm, ns] = mean_std(ndcgs);
    summary.rows.push_back({dataset, plan.spaces[si].to_string(), std::to_string(hrs.size()),
                            fmt(hm), fmt(hs), fmt(nm), fmt(ns)});
  }
  write_csv(summary, plan.out_dir + "/recsys_summary.csv");
  return n_ok;
}

int cmd_linkpred(const LinkpredPlan& plan) {
  if (plan.spaces.empty() || plan.seeds.empty())
    throw std::invalid_argument("cmd_linkpred: need at least one space and one seed");
  ensure_dir(plan.out_dir);
  const auto source = resolve_graph_source(plan.graph_source, false);

  struct Slot {
    bool ok = false;
    std::string error;
    double auc = 0.0;
  };
  const std::size_t n_runs = plan.spaces.size() * plan.seeds.size();
  std::vector<Slot> slots(n_runs);
  run_pool(n_runs, plan.pool_workers, [&](std::size_t i) {
    const auto& spec = plan.spaces[i / plan.seeds.size()];
    TrainConfig cfg = plan.base;
    cfg.seed = plan.seeds[i % plan.seeds.size()];
    try {
      const auto split = make_link_split(source.graph, cfg.seed);
      slots[i].ok = true;
      slots[i].auc = train_linkpred(source.graph, split, spec, cfg).auc;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  Csv runs;
  runs.header = {"dataset", "space", "seed", "auc", "status"};
  int n_ok = 0;
  for (std::size_t i = 0; i < n_runs; ++i) {
    const auto& spec = plan.spaces[i / plan.seeds.size()];
    std::vector<std::string> row{source.name, spec.to_string(),
                                 std::to_string(plan.seeds[i % plan.seeds.size()])};
    if (slots[i].ok) {
      ++n_ok;
      row.push_back(fmt(slots[i].auc));
      row.push_back("ok");
    } else {
      row.insert(row.end(), {"", "failed"});
    }
    runs.rows.push_back(std::move(row));
  }
  write_csv(runs, plan.out_dir + "/linkpred_runs.csv");

  Csv summary;
  summary.header = {"dataset", "space", "runs_ok", "auc_mean", "auc_std"};
  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    std::vector<double> aucs;
    for (std::size_t ki = 0; ki < plan.seeds.size(); ++ki)
      if (slots[si * plan.seeds.size() + ki].ok)
        aucs.push_back(slots[si * plan.seeds.size() + ki].auc);
    const auto [am, as] = mean_std(aucs);
    summary.rows.push_back(
        {source.name, plan.spaces[si].to_string(), std::to_string(aucs.size()), fmt(am), fmt(as)});
  }
  write_csv(summary, plan.out_dir + "/linkpred_summary.csv");
  return n_ok;
}

}  // namespace mge::bench
