#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "mge/rng.hpp"
#include "mge/spaces.hpp"

using namespace mge;

namespace {

// central finite difference, step 1e-6
double central_diff(const std::function<double()>& f, double& coord) {
  const double h = 1e-6;
  const double orig = coord;
  coord = orig + h;
  const double fp = f();
  coord = orig - h;
  const double fm = f();
  coord = orig;
  return (fp - fm) / (2.0 * h);
}

std::vector<double> random_point(Rng& rng, const SpaceSpec& spec, double lp_range = 2.0) {
  std::vector<double> x(static_cast<std::size_t>(spec.total_dim()));
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    if (f.kind == Factor::Kind::Poincare) {
      // stay well inside the ball
      const double radius = std::sqrt(-1.0 / f.curvature);
      double norm2;
      do {
        norm2 = 0.0;
        for (int i = 0; i < f.dim; ++i) {
          x[off + i] = rng.next_in(-radius, radius);
          norm2 += x[off + i] * x[off + i];
        }
      } while (norm2 > 0.64 * radius * radius);
    } else {
      for (int i = 0; i < f.dim; ++i) x[off + i] = rng.next_in(-lp_range, lp_range);
    }
    off += f.dim;
  }
  return x;
}

// l1/linf gradients need coordinate gaps wider than the FD step
bool smooth_for_grad(const SpaceSpec& spec, const std::vector<double>& x,
                     const std::vector<double>& y) {
  std::size_t off = 0;
  for (const auto& f : spec.factors) {
    std::vector<double> diffs(static_cast<std::size_t>(f.dim));
    for (int i = 0; i < f.dim; ++i) diffs[i] = std::fabs(x[off + i] - y[off + i]);
    for (double d : diffs)
      if (d < 1e-3) return false;
    if (f.kind == Factor::Kind::Lp && f.norm == Norm::Linf) {
      std::sort(diffs.begin(), diffs.end());
      if (diffs.back() - diffs[diffs.size() - 2] < 1e-3) return false;
    }
    off += f.dim;
  }
  return true;
}

void check_gradients(const SpaceSpec& spec, int trials, std::uint64_t seed) {
  Rng rng(seed);
  const int dim = spec.total_dim();
  std::vector<double> gx(dim), gy(dim);
  int done = 0;
  while (done < trials) {
    auto x = random_point(rng, spec);
    auto y = random_point(rng, spec);
    if (!smooth_for_grad(spec, x, y)) continue;
    ++done;
    REQUIRE(distance_grad(spec, x, y, gx, gy));
    auto f = [&]() { return distance(spec, x, y); };
    for (int i = 0; i < dim; ++i) {
      const double nx = central_diff(f, x[i]);
      const double ny = central_diff(f, y[i]);
      REQUIRE(std::fabs(nx - gx[i]) <= 1e-5 * std::max(1.0, std::fabs(gx[i])));
      REQUIRE(std::fabs(ny - gy[i]) <= 1e-5 * std::max(1.0, std::fabs(gy[i])));
    }
  }
}

}  // namespace

TEST_CASE("lp distances, direct evaluation") {
  const auto l1 = SpaceSpec::lp(Norm::L1, 2);
  const auto l2 = SpaceSpec::lp(Norm::L2, 2);
  const auto linf = SpaceSpec::lp(Norm::Linf, 2);
  const std::vector<double> a{1.0, 2.0}, b{3.0, 0.0};
  CHECK(distance(l1, a, b) == 4.0);
  CHECK(distance(linf, a, b) == 2.0);
  CHECK(distance(l2, a, b) == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("poincare distance closed forms") {
  const auto h2 = SpaceSpec::poincare(2);
  const std::vector<double> origin{0.0, 0.0}, half{0.5, 0.0};
  CHECK(distance(h2, origin, half) == doctest::Approx(2.0 * std::atanh(0.5)).epsilon(1e-12));

  // distance from origin = (2/sqrt(-c)) artanh(sqrt(-c) ||x||), any curvature
  for (double c : {-1.0, -0.5, -2.0}) {
    const auto spec = SpaceSpec::poincare(3, c);
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      auto x = random_point(rng, spec);
      const std::vector<double> zero(3, 0.0);
      double norm = 0.0;
      for (double v : x) norm += v * v;
      norm = std::sqrt(norm);
      const double expect = 2.0 / std::sqrt(-c) * std::atanh(std::sqrt(-c) * norm);
      CHECK(distance(spec, zero, x) == doctest::Approx(expect).epsilon(1e-10));
    }
  }

  // outside the ball is a domain error
  const std::vector<double> outside{1.5, 0.0};
  CHECK_THROWS_AS(distance(h2, origin, outside), std::domain_error);
}

TEST_CASE("distance gradients, hand values") {
  const auto l2 = SpaceSpec::lp(Norm::L2, 2);
  std::vector<double> gx(2), gy(2);
  CHECK(distance_grad(l2, std::vector<double>{3.0, 0.0}, std::vector<double>{0.0, 4.0}, gx, gy));
  CHECK(gx[0] == doctest::Approx(0.6));
  CHECK(gx[1] == doctest::Approx(-0.8));

  const auto linf = SpaceSpec::lp(Norm::Linf, 2);
  CHECK(distance_grad(linf, std::vector<double>{1.0, 5.0}, std::vector<double>{0.0, 0.0}, gx, gy));
  CHECK(gx[0] == 0.0);
  CHECK(gx[1] == 1.0);
  CHECK(gy[1] == -1.0);

  // x == y: zero gradient, flagged
  const std::vector<double> p{1.0, 2.0};
  CHECK_FALSE(distance_grad(l2, p, p, gx, gy));
  CHECK(gx[0] == 0.0);
  CHECK(gy[1] == 0.0);

  // l1 sign(0) = 0 on tied coordinates
  const auto l1 = SpaceSpec::lp(Norm::L1, 2);
  CHECK(distance_grad(l1, std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 0.0}, gx, gy));
  CHECK(gx[0] == 0.0);
  CHECK(gx[1] == 1.0);

  // linf tie-break: lowest index wins
  CHECK(distance_grad(linf, std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}, gx, gy));
  CHECK(gx[0] == 1.0);
  CHECK(gx[1] == 0.0);
}

TEST_CASE("distance gradients match central finite differences") {
  check_gradients(SpaceSpec::lp(Norm::L1, 5), 300, 101);
  check_gradients(SpaceSpec::lp(Norm::L2, 5), 300, 102);
  check_gradients(SpaceSpec::lp(Norm::Linf, 5), 300, 103);
  check_gradients(SpaceSpec::poincare(5), 300, 104);
  check_gradients(SpaceSpec::parse("l1:3*linf:3"), 300, 105);
  check_gradients(SpaceSpec::parse("l2:3*poincare:3"), 300, 106);
  check_gradients(SpaceSpec::parse("l1:2*l2:2*linf:2*poincare:2"), 200, 107);
}

TEST_CASE("riemannian scale") {
  const auto h2 = SpaceSpec::poincare(2);
  std::vector<double> grad{1.0, -2.0};
  riemannian_scale(h2, std::vector<double>{0.0, 0.0}, grad);
  CHECK(grad[0] == doctest::Approx(0.25));
  CHECK(grad[1] == doctest::Approx(-0.5));

  grad = {1.0, 0.0};
  riemannian_scale(h2, std::vector<double>{0.9, 0.0}, grad);
  CHECK(grad[0] == doctest::Approx(0.009025).epsilon(1e-12));

  // lp blocks pass through
  const auto l1 = SpaceSpec::lp(Norm::L1, 2);
  grad = {3.0, 4.0};
  riemannian_scale(l1, std::vector<double>{0.5, 0.5}, grad);
  CHECK(grad[0] == 3.0);
  CHECK(grad[1] == 4.0);

  // product: only the poincare block is scaled
  const auto prod = SpaceSpec::parse("l2:2*poincare:2");
  grad = {1.0, 1.0, 1.0, 1.0};
  riemannian_scale(prod, std::vector<double>{0.1, 0.1, 0.0, 0.0}, grad);
  CHECK(grad[0] == 1.0);
  CHECK(grad[2] == doctest::Approx(0.25));
}

TEST_CASE("project") {
  const auto h2 = SpaceSpec::poincare(2);
  std::vector<double> inside{0.3, 0.2};
  auto copy = inside;
  project(h2, copy);
  CHECK(copy == inside);

  std::vector<double> far{2.0, 0.0};
  project(h2, far);
  CHECK(far[0] == doctest::Approx(1.0 - 1e-5).epsilon(1e-12));
  CHECK(far[1] == 0.0);

  // idempotent
  auto again = far;
  project(h2, again);
  CHECK(again[0] == far[0]);

  // product: lp block untouched
  const auto prod = SpaceSpec::parse("l1:2*poincare:2");
  std::vector<double> p{5.0, -7.0, 3.0, 4.0};
  project(prod, p);
  CHECK(p[0] == 5.0);
  CHECK(p[1] == -7.0);
  const double norm = std::sqrt(p[2] * p[2] + p[3] * p[3]);
  CHECK(norm == doctest::Approx(1.0 - 1e-5).epsilon(1e-12));
}

TEST_CASE("init_points") {
  const auto spec = SpaceSpec::lp(Norm::L2, 10);
  const auto a = init_points(spec, 50, 7);
  for (double v : a.coords) {
    CHECK(v > -1e-3);
    CHECK(v < 1e-3);
  }
  const auto b = init_points(spec, 50, 7);
  CHECK(a.coords == b.coords);

  // different seeds differ in nearly every entry
  int total = 0, differing = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto u = init_points(spec, 50, s);
    const auto v = init_points(spec, 50, s + 1000);
    for (std::size_t i = 0; i < u.coords.size(); ++i) {
      ++total;
      if (u.coords[i] != v.coords[i]) ++differing;
    }
  }
  CHECK(static_cast<double>(differing) / total >= 0.99);
}

TEST_CASE("metric axioms on random triples") {
  const std::vector<std::string> specs{"l1:6",          "l2:6",          "linf:6",
                                       "poincare:6",    "l1:3*linf:3",   "l1:3*poincare:3",
                                       "l2:3*l2:3",     "linf:2*l2:2*poincare:2"};
  for (const auto& text : specs) {
    const auto spec = SpaceSpec::parse(text);
    Rng rng(mix64(std::hash<std::string>{}(text)));
    for (int t = 0; t < 1000; ++t) {
      const auto x = random_point(rng, spec);
      const auto y = random_point(rng, spec);
      const auto z = random_point(rng, spec);
      const double dxy = distance(spec, x, y);
      const double dyx = distance(spec, y, x);
      const double dxz = distance(spec, x, z);
      const double dyz = distance(spec, y, z);
      REQUIRE(distance(spec, x, x) == 0.0);
      REQUIRE(dxy == dyx);
      REQUIRE(dxy >= 0.0);
      REQUIRE(dxz <= dxy + dyz + 1e-9);
    }
  }
}

TEST_CASE("norm ordering: linf <= l2 <= l1") {
  Rng rng(55);
  const auto l1 = SpaceSpec::lp(Norm::L1, 8);
  const auto l2 = SpaceSpec::lp(Norm::L2, 8);
  const auto linf = SpaceSpec::lp(Norm::Linf, 8);
  const std::vector<double> zero(8, 0.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(8);
    for (auto& c : v) c = rng.next_in(-3.0, 3.0);
    const double n1 = distance(l1, zero, v);
    const double n2 = distance(l2, zero, v);
    const double ninf = distance(linf, zero, v);
    REQUIRE(ninf <= n2 + 1e-12);
    REQUIRE(n2 <= n1 + 1e-12);
  }
}

TEST_CASE("single-factor spec equals the bare factor distance exactly") {
  Rng rng(66);
  const auto spec = SpaceSpec::lp(Norm::L1, 4);
  for (int t = 0; t < 200; ++t) {
    const auto x = random_point(rng, spec);
    const auto y = random_point(rng, spec);
    double manual = 0.0;
    for (int i = 0; i < 4; ++i) manual += std::fabs(x[i] - y[i]);
    REQUIRE(distance(spec, x, y) == manual);
  }
}

TEST_CASE("space spec grammar") {
  CHECK(SpaceSpec::parse("l1:20").to_string() == "l1:20");
  CHECK(SpaceSpec::parse("linf:20").to_string() == "linf:20");
  CHECK(SpaceSpec::parse("poincare:20").to_string() == "poincare:20");
  CHECK(SpaceSpec::parse("poincare:10:-0.5").to_string() == "poincare:10:-0.5");
  CHECK(SpaceSpec::parse("l1:10*linf:10").to_string() == "l1:10*linf:10");
  CHECK(SpaceSpec::parse("l1:10*linf:10").total_dim() == 20);

  CHECK_THROWS_WITH_AS(SpaceSpec::parse("l3:10"), doctest::Contains("l1, l2, linf, poincare"),
                       std::invalid_argument);
  CHECK_THROWS_AS(SpaceSpec::parse("l1:0"), std::invalid_argument);
  CHECK_THROWS_AS(SpaceSpec::parse("poincare:5:1.0"), std::invalid_argument);
  CHECK_THROWS_AS(SpaceSpec::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(SpaceSpec::parse("l1"), std::invalid_argument);
}

TEST_CASE("embedding file round trip") {
  const auto spec = SpaceSpec::parse("l1:3*poincare:2");
  auto points = init_points(spec, 17, 99);
  points.coords[5] = 0.12345678901234567;
  const std::string path = "/tmp/mge_test_embedding.txt";
  write_embedding(points, path);
  const auto back = read_embedding(path);
  CHECK(back.n == 17);
  CHECK(back.dim == 5);
  CHECK(back.spec.to_string() == spec.to_string());
  CHECK(back.coords == points.coords);
}
