#include "mge/spaces.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mge/rng.hpp"

namespace mge {

namespace {

double sqnorm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double lp_distance(Norm norm, std::span<const double> x, std::span<const double> y) {
  switch (norm) {
    case Norm::L1: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
      return s;
    }
    case Norm::L2: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case Norm::Linf: {
      double m = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
      return m;
    }
  }
  return 0.0;
}

double poincare_radius2(double c) { return -1.0 / c; }

void check_ball(std::span<const double> x, double c) {
  if (sqnorm(x) >= poincare_radius2(c))
    throw std::domain_error("poincare point outside the open ball");
}

double poincare_distance(double c, std::span<const double> x, std::span<const double> y) {
  check_ball(x, c);
  check_ball(y, c);
  const double px = 1.0 + c * sqnorm(x);
  const double py = 1.0 + c * sqnorm(y);
  double n = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    n += d * d;
  }
  double arg = 1.0 - 2.0 * c * n / (px * py);
  if (arg < 1.0) arg = 1.0;  // guards cancellation for near-coincident points
  return std::acosh(arg) / std::sqrt(-c);
}

// Gradient of the lp factor distance; returns the distance. Writes zeros and
// reports degenerate = true when x == y on this block.
double lp_grad(Norm norm, std::span<const double> x, std::span<const double> y,
               std::span<double> gx, std::span<double> gy, bool& degenerate) {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) gx[i] = gy[i] = 0.0;
  switch (norm) {
    case Norm::L1: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = x[i] - y[i];
        s += std::fabs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        gx[i] = sign;
        gy[i] = -sign;
      }
      degenerate = (s == 0.0);
      if (degenerate)
        for (std::size_t i = 0; i < d; ++i) gx[i] = gy[i] = 0.0;
      return s;
    }
    case Norm::L2: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = x[i] - y[i];
        s += diff * diff;
      }
      const double dist = std::sqrt(s);
      degenerate = (dist == 0.0);
      if (!degenerate) {
        for (std::size_t i = 0; i < d; ++i) {
          const double g = (x[i] - y[i]) / dist;
          gx[i] = g;
          gy[i] = -g;
        }
      }
      return dist;
    }
    case Norm::Linf: {
      double m = 0.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double a = std::fabs(x[i] - y[i]);
        if (a > m) {  // strict: keeps the lowest index on ties
          m = a;
          arg = i;
        }
      }
      degenerate = (m == 0.0);
      if (!degenerate) {
        const double sign = x[arg] > y[arg] ? 1.0 : -1.0;
        gx[arg] = sign;
        gy[arg] = -sign;
      }
      return m;
    }
  }
  return 0.0;
}

double poincare_grad(double c, std::span<const double> x, std::span<const double> y,
                     std::span<double> gx, std::span<double> gy, bool& degenerate) {
  check_ball(x, c);
  check_ball(y, c);
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) gx[i] = gy[i] = 0.0;

  const double px = 1.0 + c * sqnorm(x);
  const double py = 1.0 + c * sqnorm(y);
  double n = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = x[i] - y[i];
    n += diff * diff;
  }
  double arg = 1.0 - 2.0 * c * n / (px * py);
  if (arg < 1.0) arg = 1.0;
  const double dist = std::acosh(arg) / std::sqrt(-c);
  const double denom2 = arg * arg - 1.0;
  degenerate = (denom2 <= 0.0);
  if (degenerate) return dist;

  const double scale = 1.0 / (std::sqrt(-c) * std::sqrt(denom2));
  const double k1 = -4.0 * c / (px * py);
  const double kx = 4.0 * c * c * n / (px * px * py);
  const double ky = 4.0 * c * c * n / (px * py * py);
  for (std::size_t i = 0; i < d; ++i) {
    gx[i] = scale * (k1 * (x[i] - y[i]) + kx * x[i]);
    gy[i] = scale * (k1 * (y[i] - x[i]) + ky * y[i]);
  }
  return dist;
}

}  // namespace

int SpaceSpec::total_dim() const {
  int d = 0;
  for (const auto& f : factors) d += f.dim;
  return d;
}

bool SpaceSpec::has_poincare() const {
  for (const auto& f : factors)
    if (f.kind == Factor::Kind::Poincare) return true;
  return false;
}

SpaceSpec SpaceSpec::lp(Norm norm, int dim) {
  SpaceSpec s;
  s.factors.push_back({Factor::Kind::Lp, dim, norm, -1.0});
  return s;
}

SpaceSpec SpaceSpec::poincare(int dim, double curvature) {
  SpaceSpec s;
  s.factors.push_back({Factor::Kind::Poincare, dim, Norm::L2, curvature});
  return s;
}

SpaceSpec SpaceSpec::parse(const std::string& text) {
  SpaceSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t star = text.find('*', pos);
    const std::string part = text.substr(pos, star == std::string::npos ? star : star - pos);
    std::istringstream ps(part);
    std::string name, dim_str, extra_str;
    std::getline(ps, name, ':');
    std::getline(ps, dim_str, ':');
    std::getline(ps, extra_str, ':');
    if (name.empty() || dim_str.empty())
      throw std::invalid_argument("space spec: expected '<factor>:<dim>' in '" + part +
                                  "' (valid factors: l1, l2, linf, poincare)");
    int dim = 0;
    try {
      dim = std::stoi(dim_str);
    } catch (const std::exception&) {
      throw std::invalid_argument("space spec: bad dimension '" + dim_str + "' in '" + part + "'");
    }
    if (dim < 1) throw std::invalid_argument("space spec: dimension must be >= 1 in '" + part + "'");

    Factor f;
    f.dim = dim;
    if (name == "l1") {
      f.kind = Factor::Kind::Lp;
      f.norm = Norm::L1;
    } else if (name == "l2") {
      f.kind = Factor::Kind::Lp;
      f.norm = Norm::L2;
    } else if (name == "linf") {
      f.kind = Factor::Kind::Lp;
      f.norm = Norm::Linf;
    } else if (name == "poincare") {
      f.kind = Factor::Kind::Poincare;
      f.curvature = -1.0;
      if (!extra_str.empty()) {
        try {
          f.curvature = std::stod(extra_str);
        } catch (const std::exception&) {
          throw std::invalid_argument("space spec: bad curvature '" + extra_str + "'");
        }
        if (!(f.curvature < 0.0))
          throw std::invalid_argument("space spec: poincare curvature must be < 0");
      }
    } else {
      throw std::invalid_argument("space spec: unknown factor '" + name +
                                  "' (valid factors: l1, l2, linf, poincare)");
    }
    if (f.kind == Factor::Kind::Lp && !extra_str.empty())
      throw std::invalid_argument("space spec: unexpected ':" + extra_str + "' after '" + name + "'");
    spec.factors.push_back(f);
    if (star == std::string::npos) break;
    pos = star + 1;
  }
  if (spec.factors.empty()) throw std::invalid_argument("space spec: empty");
  return spec;
}

std::string SpaceSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += '*';
    const auto& f = factors[i];
    if (f.kind == Factor::Kind::Poincare) {
      out += "poincare:" + std::to_string(f.dim);
      if (f.curvature != -1.0) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), ":%.17g", f.curvature);
        out += buf;
      }
    } else {
      out += f.norm == Norm::L1 ? "l1" : (f.norm == Norm::L2 ? "l2" : "linf");
      out += ':' + std::to_string(f.dim);
    }
  }
  return out;
}

double distance(const SpaceSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (spec.factors.size() == 1) {
    const auto& f = spec.factors[0];
    return f.kind == Factor::Kind::Poincare ? poincare_distance(f.curvature, x, y)
                                            : lp_distance(f.norm, x, y);
  }
  double sum2 = 0.0;
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    const auto xs = x.subspan(off, f.dim);
    const auto ys = y.subspan(off, f.dim);
    const double d = f.kind == Factor::Kind::Poincare ? poincare_distance(f.curvature, xs, ys)
                                                      : lp_distance(f.norm, xs, ys);
    sum2 += d * d;
    off += f.dim;
  }
  return std::sqrt(sum2);
}

DistGrad distance_with_grad(const SpaceSpec& spec, std::span<const double> x,
                            std::span<const double> y, std::span<double> grad_x,
                            std::span<double> grad_y) {
  if (spec.factors.size() == 1) {
    const auto& f = spec.factors[0];
    bool degenerate = false;
    const double d = f.kind == Factor::Kind::Poincare
                         ? poincare_grad(f.curvature, x, y, grad_x, grad_y, degenerate)
                         : lp_grad(f.norm, x, y, grad_x, grad_y, degenerate);
    return {d, !degenerate};
  }

  // Product: d = sqrt(sum d_i^2), so the block-i gradient picks up d_i / d.
  // A coincident factor contributes zero (its d_i/d weight vanishes).
  constexpr std::size_t kMaxFactors = 32;
  if (spec.factors.size() > kMaxFactors)
    throw std::invalid_argument("distance_with_grad: too many product factors");
  double fd[kMaxFactors];
  double sum2 = 0.0;
  {
    std::size_t off = 0;
    std::size_t fi = 0;
    for (const auto& f : spec.factors) {
      bool deg = false;
      const auto xs = x.subspan(off, f.dim);
      const auto ys = y.subspan(off, f.dim);
      const double d = f.kind == Factor::Kind::Poincare
                           ? poincare_grad(f.curvature, xs, ys, grad_x.subspan(off, f.dim),
                                           grad_y.subspan(off, f.dim), deg)
                           : lp_grad(f.norm, xs, ys, grad_x.subspan(off, f.dim),
                                     grad_y.subspan(off, f.dim), deg);
      fd[fi++] = deg ? 0.0 : d;
      sum2 += d * d;
      off += f.dim;
    }
  }
  const double total = std::sqrt(sum2);
  if (total == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) grad_x[i] = grad_y[i] = 0.0;
    return {0.0, false};
  }
  std::size_t off = 0;
  std::size_t fi = 0;
  for (const auto& f : spec.factors) {
    const double scale = fd[fi++] / total;
    for (int i = 0; i < f.dim; ++i) {
      grad_x[off + i] *= scale;
      grad_y[off + i] *= scale;
    }
    off += f.dim;
  }
  return {total, true};
}

bool distance_grad(const SpaceSpec& spec, std::span<const double> x, std::span<const double> y,
                   std::span<double> grad_x, std::span<double> grad_y) {
  return distance_with_grad(spec, x, y, grad_x, grad_y).differentiable;
}

void riemannian_scale(const SpaceSpec& spec, std::span<const double> x,
                      std::span<double> ambient_grad) {
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    if (f.kind == Factor::Kind::Poincare) {
      const double inv_lambda = (1.0 + f.curvature * sqnorm(x.subspan(off, f.dim))) / 2.0;
      const double s = inv_lambda * inv_lambda;
      for (int i = 0; i < f.dim; ++i) ambient_grad[off + i] *= s;
    }
    off += f.dim;
  }
}

void project(const SpaceSpec& spec, std::span<double> x) {
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    if (f.kind == Factor::Kind::Poincare) {
      const double max_norm = std::sqrt(poincare_radius2(f.curvature)) * (1.0 - kBallMargin);
      const double norm = std::sqrt(sqnorm(x.subspan(off, f.dim)));
      if (norm >= max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (int i = 0; i < f.dim; ++i) x[off + i] *= s;
      }
    }
    off += f.dim;
  }
}

PointBuffer init_points(const SpaceSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("init_points: n must be >= 1");
  PointBuffer buf;
  buf.spec = spec;
  buf.n = n;
  buf.dim = spec.total_dim();
  buf.coords.resize(static_cast<std::size_t>(n) * buf.dim);
  Rng rng(seed);
  for (auto& v : buf.coords) v = rng.next_in(-1e-3, 1e-3);
  return buf;
}

void write_embedding(const PointBuffer& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_embedding: cannot open '" + path + "'");
  out << "# space=" << points.spec.to_string() << " nodes=" << points.n << " dim=" << points.dim
      << '\n';
  char buf[32];
  for (int i = 0; i < points.n; ++i) {
    out << i;
    for (double v : points.row(i)) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

PointBuffer read_embedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_embedding: cannot open '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::string space_str;
  int n = -1, dim = -1;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("space=", 0) == 0) space_str = tok.substr(6);
      else if (tok.rfind("nodes=", 0) == 0) n = std::stoi(tok.substr(6));
      else if (tok.rfind("dim=", 0) == 0) dim = std::stoi(tok.substr(4));
    }
  }
  if (space_str.empty() || n < 1 || dim < 1)
    throw std::runtime_error("read_embedding: bad header in '" + path + "'");

  PointBuffer buf;
  buf.spec = SpaceSpec::parse(space_str);
  buf.n = n;
  buf.dim = dim;
  if (buf.spec.total_dim() != dim)
    throw std::runtime_error("read_embedding: header dim does not match space spec");
  buf.coords.assign(static_cast<std::size_t>(n) * dim, 0.0);
  for (int i = 0; i < n; ++i) {
    int id = -1;
    if (!(in >> id) || id != i)
      throw std::runtime_error("read_embedding: expected row for node " + std::to_string(i));
    for (int j = 0; j < dim; ++j)
      if (!(in >> buf.coords[static_cast<std::size_t>(i) * dim + j]))
        throw std::runtime_error("read_embedding: truncated row for node " + std::to_string(i));
  }
  return buf;
}

}  // namespace mge
