#pragma once

#include <utility>

#include "neuronurbs/types.hpp"

namespace nnrb {

struct FitSpec {
  int degree_u = 3, degree_v = 3;
  std::size_t num_ctrl_u = 6, num_ctrl_v = 6;

  void validate() const {
    if (degree_u < 1 || degree_v < 1)
      throw std::invalid_argument("fit-spec: degree must be >= 1");
    if (num_ctrl_u < static_cast<std::size_t>(degree_u) + 1 ||
        num_ctrl_v < static_cast<std::size_t>(degree_v) + 1)
      throw std::invalid_argument("fit-spec: num_ctrl must be >= degree + 1");
  }
};

// Clamped knot vector on [0,1] with uniformly spaced interior knots.
KnotVector uniform_clamped_knots(int degree, std::size_t num_ctrl);

// Separable global least squares under uniform parameterization.
// Returns a unit-weight B-spline surface and the RMS residual over
// the grid points.
std::pair<NurbsSurface, double> fit_surface(const UvGrid &grid, const FitSpec &spec);

// The black-box baseline route: always cubic, control counts
// max(degree+1, ceil(samples/4)) per direction.
NurbsSurface default_fit(const UvGrid &grid);

}  // namespace nnrb
