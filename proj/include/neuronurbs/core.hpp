#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "neuronurbs/types.hpp"

namespace nnrb {

// Cox-de Boor basis values N_i^p(u), one per basis function
// (|knots| - degree - 1 values). 0/0 spans contribute 0. The last
// nonempty span is treated as closed on the right so clamped
// curves interpolate the end control point.
std::vector<double> basis_functions(const KnotVector &knots, int degree, double u);

Vec3 curve_eval(const NurbsCurve &curve, double u);

Vec3 surface_eval(const NurbsSurface &surface, double u, double v);

// p = |U| - n - 1, rejecting degrees < 1 or >= n.
std::pair<int, int> infer_degrees(std::size_t len_knots_u, std::size_t len_knots_v,
                                  std::size_t n, std::size_t m);

// n x m points at uniform parameter spacing over the full knot
// ranges, endpoints included.
UvGrid sample_uv_grid(const NurbsSurface &surface, std::size_t n, std::size_t m);

// Uniform random (u,v) samples; deterministic given seed.
PointCloud sample_point_cloud(const NurbsSurface &surface, std::size_t count,
                              std::uint64_t rng_seed);

}  // namespace nnrb
