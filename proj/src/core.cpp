#include "neuronurbs/core.hpp"

#include <random>
#include <stdexcept>

namespace nnrb {

namespace {

// Degree-0 indicator, half-open spans. The last span with positive
// width is closed on the right so u = last knot stays in support.
bool in_span(const std::vector<double> &knots, std::size_t i, double u) {
  if (knots[i] <= u && u < knots[i + 1]) return true;
  if (u == knots[i + 1] && knots[i] < knots[i + 1]) {
    // closed-right only at the domain end
    for (std::size_t j = i + 1; j + 1 < knots.size(); ++j)
      if (knots[j] < knots[j + 1]) return false;
    return true;
  }
  return false;
}

}  // namespace

std::vector<double> basis_functions(const KnotVector &kv, int degree, double u) {
  if (degree < 0) throw std::invalid_argument("basis: negative degree");
  const std::vector<double> &knots = kv.values();
  if (knots.size() < static_cast<std::size_t>(degree) + 2)
    throw std::invalid_argument("basis: |knots| < degree + 2");
  if (u < knots.front() || u > knots.back())
    throw std::invalid_argument("basis: parameter outside knot range");

  const std::size_t num_basis = knots.size() - degree - 1;

  // degree 0
  std::vector<double> values(knots.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    values[i] = in_span(knots, i, u) ? 1.0 : 0.0;

  // triangular recursion, 0/0 terms dropped
  for (int p = 1; p <= degree; ++p) {
    std::vector<double> next(knots.size() - p - 1, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      double left = 0.0, right = 0.0;
      double den_l = knots[i + p] - knots[i];
      double den_r = knots[i + p + 1] - knots[i + 1];
      if (den_l > 0.0) left = (u - knots[i]) / den_l * values[i];
      if (den_r > 0.0) right = (knots[i + p + 1] - u) / den_r * values[i + 1];
      next[i] = left + right;
    }
    values = std::move(next);
  }
  values.resize(num_basis);
  return values;
}

Vec3 curve_eval(const NurbsCurve &curve, double u) {
  curve.validate();
  std::vector<double> basis = basis_functions(curve.knots, curve.degree, u);
  Vec3 num{};
  double den = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double c = basis[i] * curve.weights[i];
    num = num + curve.control_points[i] * c;
    den += c;
  }
  if (!(den > 0.0)) throw std::runtime_error("curve: zero rational denominator");
  return num * (1.0 / den);
}

Vec3 surface_eval(const NurbsSurface &surface, double u, double v) {
  std::vector<double> bu = basis_functions(surface.knots_u, surface.degree_u, u);
  std::vector<double> bv = basis_functions(surface.knots_v, surface.degree_v, v);
  Vec3 num{};
  double den = 0.0;
  for (std::size_t i = 0; i < bu.size(); ++i) {
    if (bu[i] == 0.0) continue;
    for (std::size_t j = 0; j < bv.size(); ++j) {
      double c = bu[i] * bv[j] * surface.weights.at(i, j);
      num = num + surface.control_points.at(i, j) * c;
      den += c;
    }
  }
  if (!(den > 0.0)) throw std::runtime_error("surface: zero rational denominator");
  return num * (1.0 / den);
}

std::pair<int, int> infer_degrees(std::size_t len_knots_u, std::size_t len_knots_v,
                                  std::size_t n, std::size_t m) {
  auto one = [](std::size_t len, std::size_t count) {
    if (len < count + 2)
      throw std::invalid_argument("infer-degrees: knot vector too short");
    int p = static_cast<int>(len - count - 1);
    if (p < 1 || static_cast<std::size_t>(p) >= count)
      throw std::invalid_argument("infer-degrees: inconsistent degree " +
                                  std::to_string(p));
    return p;
  };
  return {one(len_knots_u, n), one(len_knots_v, m)};
}

UvGrid sample_uv_grid(const NurbsSurface &surface, std::size_t n, std::size_t m) {
  if (n < 2 || m < 2) throw std::invalid_argument("uv-grid: need n, m >= 2");
  surface.validate();
  UvGrid grid;
  grid.u_min = surface.knots_u.front();
  grid.u_max = surface.knots_u.back();
  grid.v_min = surface.knots_v.front();
  grid.v_max = surface.knots_v.back();
  grid.points = Grid<Vec3>(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double u = grid.u_min + (grid.u_max - grid.u_min) * double(i) / double(n - 1);
    for (std::size_t j = 0; j < m; ++j) {
      double v = grid.v_min + (grid.v_max - grid.v_min) * double(j) / double(m - 1);
      grid.points.at(i, j) = surface_eval(surface, u, v);
    }
  }
  return grid;
}

PointCloud sample_point_cloud(const NurbsSurface &surface, std::size_t count,
                              std::uint64_t rng_seed) {
  if (count < 1) throw std::invalid_argument("point-cloud: count >= 1 required");
  surface.validate();
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> du(surface.knots_u.front(),
                                            surface.knots_u.back());
  std::uniform_real_distribution<double> dv(surface.knots_v.front(),
                                            surface.knots_v.back());
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double u = du(rng);
    double v = dv(rng);
    cloud.points.push_back(surface_eval(surface, u, v));
  }
  return cloud;
}

}  // namespace nnrb
