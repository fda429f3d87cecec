#pragma once

#include <cstdint>
#include <vector>

#include "neuronurbs/types.hpp"

namespace nnrb {

// Synthetic corpus families standing in for a CAD dataset at desk
// scale: planes, ruled sweeps, jittered cubic patches, and rational
// cylinder-segment extrusions.
struct CorpusSpec {
  std::size_t planes = 0;
  std::size_t ruled = 0;
  std::size_t random_smooth = 0;
  std::size_t rational_arcs = 0;
  std::size_t max_ctrl = 6;   // cap on control counts for random-smooth
  double extent = 2.0;        // coordinate scale of generated geometry
  std::uint64_t seed = 0;

  void validate() const {
    if (planes + ruled + random_smooth + rational_arcs == 0)
      throw std::invalid_argument("corpus-spec: all family counts are zero");
    if (max_ctrl < 4) throw std::invalid_argument("corpus-spec: max_ctrl < 4");
  }
};

std::vector<NurbsSurface> generate(const CorpusSpec &spec);

// Exact-parameter deduplication after normalization; keeps first
// occurrences in order.
std::vector<NurbsSurface> deduplicate(const std::vector<NurbsSurface> &corpus);

// Quadratic rational arc of angle theta (radians, < pi) and radius r,
// swept along the z axis: the exact cylinder-segment surface.
NurbsSurface cylinder_segment(double radius, double theta, double height);

}  // namespace nnrb
