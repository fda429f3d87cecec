#include <cmath>
#include <random>

#include <doctest.h>

#include "neuronurbs/core.hpp"
#include "neuronurbs/fitting.hpp"

using namespace nnrb;

namespace {

NurbsSurface bspline_surface(int p, int q, std::size_t n, std::size_t m,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cd(-1.5, 1.5);
  NurbsSurface s;
  s.degree_u = p;
  s.degree_v = q;
  s.knots_u = uniform_clamped_knots(p, n);
  s.knots_v = uniform_clamped_knots(q, m);
  s.control_points = Grid<Vec3>(n, m);
  s.weights = Grid<double>(n, m, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      s.control_points.at(i, j) = {double(i) / double(n - 1), double(j) / double(m - 1),
                                   cd(rng)};
  return s;
}

UvGrid plane_grid(std::size_t n, std::size_t m) {
  UvGrid g;
  g.points = Grid<Vec3>(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double x = double(i) / double(n - 1), y = double(j) / double(m - 1);
      g.points.at(i, j) = {x, y, 0.7 * x - 0.3 * y + 2.0};
    }
  return g;
}

UvGrid wavy_grid(std::size_t n, std::size_t m) {
  UvGrid g;
  g.points = Grid<Vec3>(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double x = double(i) / double(n - 1), y = double(j) / double(m - 1);
      g.points.at(i, j) = {x, y, std::sin(3.0 * x) * std::cos(2.0 * y)};
    }
  return g;
}

}  // namespace

TEST_CASE("uniform_clamped_knots shape and spacing") {
  KnotVector k = uniform_clamped_knots(3, 6);
  REQUIRE(k.size() == 10);
  for (int i = 0; i < 4; ++i) {
    CHECK(k[i] == 0.0);
    CHECK(k[9 - i] == 1.0);
  }
  CHECK(k[4] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(k[5] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  KnotVector b = uniform_clamped_knots(2, 3);  // Bezier case, no interior knots
  REQUIRE(b.size() == 6);
  CHECK(b[2] == 0.0);
  CHECK(b[3] == 1.0);
}

TEST_CASE("plane grids are reproduced to machine precision") {
  UvGrid g = plane_grid(12, 9);
  auto [s, rms] = fit_surface(g, {3, 3, 6, 5});
  CHECK(rms < 1e-10);
  for (int t = 0; t < 100; ++t) {
    double u = double(t % 10) / 9.0, v = double(t / 10) / 9.0;
    Vec3 p = surface_eval(s, u, v);
    CHECK(std::fabs(p.z - (0.7 * p.x - 0.3 * p.y + 2.0)) < 1e-9);
  }
}

TEST_CASE("sample-then-refit recovers a cubic 6x6 B-spline within 1e-6") {
  NurbsSurface src = bspline_surface(3, 3, 6, 6, 211);
  UvGrid g = sample_uv_grid(src, 32, 32);
  auto [fit, rms] = fit_surface(g, {3, 3, 6, 6});
  CHECK(rms < 1e-8);
  std::mt19937_64 rng(212);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    double u = ud(rng), v = ud(rng);
    CHECK((surface_eval(fit, u, v) - surface_eval(src, u, v)).norm() < 1e-6);
  }
}

TEST_CASE("refit recovers mixed-degree sources too") {
  NurbsSurface src = bspline_surface(2, 1, 5, 4, 223);
  UvGrid g = sample_uv_grid(src, 24, 24);
  auto [fit, rms] = fit_surface(g, {2, 1, 5, 4});
  CHECK(rms < 1e-9);
}

TEST_CASE("residual is monotone non-increasing in control count") {
  UvGrid g = wavy_grid(24, 24);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t nc = 4; nc <= 12; nc += 2) {
    auto [s, rms] = fit_surface(g, {3, 3, nc, nc});
    CHECK(rms <= prev + 1e-12);
    prev = rms;
  }
  auto [tight, rms_tight] = fit_surface(g, {3, 3, 4, 4});
  auto [loose, rms_loose] = fit_surface(g, {3, 3, 6, 6});
  CHECK(rms_loose < rms_tight);  // strictly better on a curved grid
}

TEST_CASE("fit is linear in the grid data") {
  UvGrid a = wavy_grid(16, 16);
  UvGrid b = plane_grid(16, 16);
  UvGrid sum = a;
  for (std::size_t i = 0; i < sum.points.data.size(); ++i)
    sum.points.data[i] = a.points.data[i] + b.points.data[i];
  FitSpec spec{3, 3, 5, 5};
  auto [fa, ra] = fit_surface(a, spec);
  auto [fb, rb] = fit_surface(b, spec);
  auto [fs, rs] = fit_surface(sum, spec);
  for (std::size_t i = 0; i < fs.control_points.data.size(); ++i) {
    Vec3 expect = fa.control_points.data[i] + fb.control_points.data[i];
    CHECK((fs.control_points.data[i] - expect).norm() < 1e-9);
  }
}

TEST_CASE("fit output always satisfies surface invariants, unit weights") {
  UvGrid g = wavy_grid(20, 18);
  auto [s, rms] = fit_surface(g, {3, 2, 7, 5});
  CHECK_NOTHROW(s.validate());
  for (double w : s.weights.data) CHECK(w == 1.0);
  CHECK(s.num_ctrl_u() == 7);
  CHECK(s.num_ctrl_v() == 5);
}

TEST_CASE("fit precondition and spec errors") {
  UvGrid g = plane_grid(5, 5);
  CHECK_THROWS_AS(fit_surface(g, {3, 3, 6, 6}), std::invalid_argument);  // ctrl > samples
  CHECK_THROWS_AS(fit_surface(g, {0, 3, 4, 4}), std::invalid_argument);
  CHECK_THROWS_AS(fit_surface(g, {3, 3, 3, 4}), std::invalid_argument);  // ctrl < p+1
}

TEST_CASE("default_fit is always cubic with the documented control count") {
  UvGrid g = plane_grid(32, 32);
  NurbsSurface s = default_fit(g);
  CHECK(s.degree_u == 3);
  CHECK(s.degree_v == 3);
  CHECK(s.num_ctrl_u() == 8);  // ceil(32/4)
  CHECK(s.num_ctrl_v() == 8);
  CHECK_NOTHROW(s.validate());
  for (int t = 0; t < 50; ++t) {
    double u = double(t % 7) / 6.0, v = double(t / 7) / 7.0;
    Vec3 p = surface_eval(s, u, v);
    CHECK(std::fabs(p.z - (0.7 * p.x - 0.3 * p.y + 2.0)) < 1e-8);
  }
}

TEST_CASE("default_fit on small grids clamps control count to degree + 1") {
  UvGrid g = plane_grid(4, 4);
  NurbsSurface s = default_fit(g);
  CHECK(s.degree_u == 3);
  CHECK(s.num_ctrl_u() == 4);
  UvGrid tiny = plane_grid(3, 4);
  CHECK_THROWS_AS(default_fit(tiny), std::invalid_argument);
}

TEST_CASE("default_fit turns a quadratic source cubic") {
  NurbsSurface src = bspline_surface(2, 2, 4, 4, 227);
  UvGrid g = sample_uv_grid(src, 16, 16);
  NurbsSurface s = default_fit(g);
  CHECK(s.degree_u == 3);
  CHECK(s.degree_v == 3);
}
