#include "neuronurbs/fitting.hpp"

#include <cmath>
#include <vector>

#include "neuronurbs/core.hpp"

namespace nnrb {

namespace {

// Dense symmetric-positive solve, Gaussian elimination with partial
// pivoting. Problem sizes here are <= a few dozen.
void solve_inplace(std::vector<double> &a, std::vector<double> &b, std::size_t n,
                   std::size_t nrhs) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-12)
      throw std::runtime_error("fit: rank-deficient collocation matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      for (std::size_t j = 0; j < nrhs; ++j) std::swap(b[col * nrhs + j], b[piv * nrhs + j]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      for (std::size_t j = 0; j < nrhs; ++j) b[r * nrhs + j] -= f * b[col * nrhs + j];
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    for (std::size_t j = 0; j < nrhs; ++j) {
      double s = b[col * nrhs + j];
      for (std::size_t c2 = col + 1; c2 < n; ++c2) s -= a[col * n + c2] * b[c2 * nrhs + j];
      b[col * nrhs + j] = s / a[col * n + col];
    }
  }
}

// Collocation matrix: basis values at uniform parameters.
std::vector<double> collocation(const KnotVector &knots, int degree, std::size_t samples,
                                std::size_t num_ctrl) {
  std::vector<double> mat(samples * num_ctrl, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    double t = double(s) / double(samples - 1);
    std::vector<double> basis = basis_functions(knots, degree, t);
    for (std::size_t i = 0; i < num_ctrl; ++i) mat[s * num_ctrl + i] = basis[i];
  }
  return mat;
}

}  // namespace

KnotVector uniform_clamped_knots(int degree, std::size_t num_ctrl) {
  std::vector<double> knots;
  const std::size_t interior = num_ctrl - degree - 1;
  for (int i = 0; i <= degree; ++i) knots.push_back(0.0);
  for (std::size_t i = 1; i <= interior; ++i)
    knots.push_back(double(i) / double(interior + 1));
  for (int i = 0; i <= degree; ++i) knots.push_back(1.0);
  return KnotVector(knots);
}

std::pair<NurbsSurface, double> fit_surface(const UvGrid &grid, const FitSpec &spec) {
  spec.validate();
  const std::size_t gn = grid.points.rows, gm = grid.points.cols;
  if (gn < spec.num_ctrl_u || gm < spec.num_ctrl_v)
    throw std::invalid_argument("fit: grid smaller than requested control counts");

  NurbsSurface s;
  s.degree_u = spec.degree_u;
  s.degree_v = spec.degree_v;
  s.knots_u = uniform_clamped_knots(spec.degree_u, spec.num_ctrl_u);
  s.knots_v = uniform_clamped_knots(spec.degree_v, spec.num_ctrl_v);

  std::vector<double> bu = collocation(s.knots_u, spec.degree_u, gn, spec.num_ctrl_u);
  std::vector<double> bv = collocation(s.knots_v, spec.degree_v, gm, spec.num_ctrl_v);

  const std::size_t nu = spec.num_ctrl_u, nv = spec.num_ctrl_v;

  // normal equations of the separable problem:
  // (Bu'Bu) C (Bv'Bv) = Bu' S Bv, solved in two passes
  std::vector<double> gu(nu * nu, 0.0), gv(nv * nv, 0.0);
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < nu; ++j)
      for (std::size_t sidx = 0; sidx < gn; ++sidx)
        gu[i * nu + j] += bu[sidx * nu + i] * bu[sidx * nu + j];
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = 0; j < nv; ++j)
      for (std::size_t sidx = 0; sidx < gm; ++sidx)
        gv[i * nv + j] += bv[sidx * nv + i] * bv[sidx * nv + j];

  // rhs = Bu' S Bv, one column block per coordinate
  std::vector<double> rhs(nu * nv * 3, 0.0);
  {
    std::vector<double> tmp(gn * nv * 3, 0.0);  // S Bv
    for (std::size_t r = 0; r < gn; ++r)
      for (std::size_t c = 0; c < nv; ++c) {
        Vec3 acc{};
        for (std::size_t sidx = 0; sidx < gm; ++sidx)
          acc = acc + grid.points.at(r, sidx) * bv[sidx * nv + c];
        tmp[(r * nv + c) * 3 + 0] = acc.x;
        tmp[(r * nv + c) * 3 + 1] = acc.y;
        tmp[(r * nv + c) * 3 + 2] = acc.z;
      }
    for (std::size_t i = 0; i < nu; ++i)
      for (std::size_t c = 0; c < nv; ++c)
        for (std::size_t r = 0; r < gn; ++r)
          for (std::size_t d = 0; d < 3; ++d)
            rhs[(i * nv + c) * 3 + d] += bu[r * nu + i] * tmp[(r * nv + c) * 3 + d];
  }

  // solve (Bu'Bu) X = rhs, then (Bv'Bv) C' = X' per coordinate
  solve_inplace(gu, rhs, nu, nv * 3);
  std::vector<double> rhs_t(nv * nu * 3);
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t c = 0; c < nv; ++c)
      for (std::size_t d = 0; d < 3; ++d)
        rhs_t[(c * nu + i) * 3 + d] = rhs[(i * nv + c) * 3 + d];
  solve_inplace(gv, rhs_t, nv, nu * 3);

  s.control_points = Grid<Vec3>(nu, nv);
  s.weights = Grid<double>(nu, nv, 1.0);
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t c = 0; c < nv; ++c)
      s.control_points.at(i, c) = {rhs_t[(c * nu + i) * 3 + 0], rhs_t[(c * nu + i) * 3 + 1],
                                   rhs_t[(c * nu + i) * 3 + 2]};
  s.validate();

  double sq = 0.0;
  for (std::size_t r = 0; r < gn; ++r) {
    double u = double(r) / double(gn - 1);
    for (std::size_t c = 0; c < gm; ++c) {
      double v = double(c) / double(gm - 1);
      Vec3 d = surface_eval(s, u, v) - grid.points.at(r, c);
      sq += d.norm2();
    }
  }
  double rms = std::sqrt(sq / double(gn * gm));
  return {s, rms};
}

NurbsSurface default_fit(const UvGrid &grid) {
  if (grid.points.rows < 4 || grid.points.cols < 4)
    throw std::invalid_argument("default-fit: grid must be at least 4x4");
  FitSpec spec;
  spec.degree_u = spec.degree_v = 3;
  spec.num_ctrl_u = std::max<std::size_t>(4, (grid.points.rows + 3) / 4);
  spec.num_ctrl_v = std::max<std::size_t>(4, (grid.points.cols + 3) / 4);
  return fit_surface(grid, spec).first;
}

}  // namespace nnrb
