#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mge {

enum class Norm { L1, L2, Linf };

// One block of a (possibly product) embedding space.
struct Factor {
  enum class Kind { Lp, Poincare };
  Kind kind = Kind::Lp;
  int dim = 0;
  Norm norm = Norm::L2;      // Lp factors
  double curvature = -1.0;   // Poincare factors, c < 0
};

// Algebraic description of the target metric space. Factor distances combine
// as sqrt(sum d_i^2); a single-factor spec returns the bare factor distance.
struct SpaceSpec {
  std::vector<Factor> factors;

  int total_dim() const;
  bool has_poincare() const;

  // Grammar: `l1:20`, `l2:20`, `linf:20`, `poincare:20[:c]`, factors joined
  // with '*', e.g. `l1:10*linf:10`. Throws std::invalid_argument on errors,
  // listing the valid factor names.
  static SpaceSpec parse(const std::string& text);
  std::string to_string() const;

  static SpaceSpec lp(Norm norm, int dim);
  static SpaceSpec poincare(int dim, double curvature = -1.0);
};

// n x total_dim coordinate matrix over a SpaceSpec, row per node.
struct PointBuffer {
  SpaceSpec spec;
  int n = 0;
  int dim = 0;
  std::vector<double> coords;  // row-major

  std::span<double> row(int i) { return {coords.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> row(int i) const { return {coords.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
};

// Strict feasibility margin for Poincare blocks: points are kept at norm
// <= radius * (1 - kBallMargin).
inline constexpr double kBallMargin = 1e-5;

// Distance between two points of the space. Throws std::domain_error if a
// Poincare block lies outside its open ball.
double distance(const SpaceSpec& spec, std::span<const double> x, std::span<const double> y);

// Ambient (Euclidean) gradients of distance() wrt x and y, written into
// grad_x / grad_y. Returns false (with zero gradients) when x == y, where the
// distance is not differentiable. l1 uses sign(x_i - y_i) with sign(0) = 0;
// linf puts +-1 on the max-|difference| coordinate, lowest index on ties.
bool distance_grad(const SpaceSpec& spec, std::span<const double> x, std::span<const double> y,
                   std::span<double> grad_x, std::span<double> grad_y);

struct DistGrad {
  double dist = 0.0;
  bool differentiable = false;
};

// Fused distance + gradient evaluation for hot loops.
DistGrad distance_with_grad(const SpaceSpec& spec, std::span<const double> x,
                            std::span<const double> y, std::span<double> grad_x,
                            std::span<double> grad_y);

// Converts an ambient gradient to the Riemannian gradient in place: Poincare
// blocks scale by (1/lambda_x^c)^2 = ((1 + c||x||^2)/2)^2, Lp blocks pass
// through.
void riemannian_scale(const SpaceSpec& spec, std::span<const double> x, std::span<double> ambient_grad);

// Pulls Poincare blocks that left the feasible region back to norm
// radius * (1 - kBallMargin); Lp blocks are untouched. Idempotent.
void project(const SpaceSpec& spec, std::span<double> x);

// i.i.d. uniform coordinates in (-1e-3, 1e-3), deterministic per seed.
PointBuffer init_points(const SpaceSpec& spec, int n, std::uint64_t seed);

// ---- Embedding files ---------------------------------------------------
// Header line `# space=<spec> nodes=<n> dim=<d>`, then one `node_id c0 ...`
// row per node at full double precision.

void write_embedding(const PointBuffer& points, const std::string& path);
PointBuffer read_embedding(const std::string& path);

}  // namespace mge
