#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "neuronurbs/types.hpp"

namespace nnrb {

struct PreprocessConfig {
  std::size_t pad_dim = 10;   // d: max control points per direction
  std::size_t knot_len = 10;  // k: max knot-vector length

  void validate() const {
    if (pad_dim < 2) throw std::invalid_argument("config: pad_dim < 2");
    if (knot_len < 4) throw std::invalid_argument("config: knot_len < 4");
  }
};

// Everything needed to invert normalize(): per-axis minima, the shared
// largest-range scale, knot ranges, and the weight scale.
struct NormalizationRecord {
  Vec3 mins{};
  double d_norm = 1.0;
  double weight_scale = 1.0;
  double u_min = 0.0, u_range = 1.0;
  double v_min = 0.0, v_range = 1.0;
};

// Fixed-shape (d, d, 4) tensor of (x̂, ŷ, ẑ, w) plus padded knot
// vectors and the padding mask. Channel-last row-major storage.
struct PaddedBundle {
  std::size_t pad_dim = 0, knot_len = 0;
  std::vector<double> p_w;      // pad_dim * pad_dim * 4
  std::vector<double> knots_u;  // knot_len
  std::vector<double> knots_v;  // knot_len
  std::vector<bool> mask;       // pad_dim * pad_dim
  std::size_t true_n = 0, true_m = 0;
  std::size_t true_knot_len_u = 0, true_knot_len_v = 0;

  double &pw(std::size_t i, std::size_t j, std::size_t c) {
    return p_w[(i * pad_dim + j) * 4 + c];
  }
  double pw(std::size_t i, std::size_t j, std::size_t c) const {
    return p_w[(i * pad_dim + j) * 4 + c];
  }
  bool masked_on(std::size_t i, std::size_t j) const { return mask[i * pad_dim + j]; }
};

std::pair<NurbsSurface, NormalizationRecord> normalize(const NurbsSurface &surface);

NurbsSurface denormalize(const NurbsSurface &surface, const NormalizationRecord &record);

PaddedBundle pack(const NurbsSurface &normalized, const PreprocessConfig &config);

NurbsSurface unpack(const PaddedBundle &bundle);

// [0,1] -> [-1,1] on unmasked p_w entries and true-length knot entries.
PaddedBundle to_model_range(const PaddedBundle &bundle);
PaddedBundle from_model_range(const PaddedBundle &bundle);

// Makes arbitrary decoded tensors in [0,1] into a valid bundle or
// rejects: dead rows/columns (all weights <= 0) are removed, surviving
// nonpositive weights are clamped to a floor, knot vectors are clipped
// at the first entry reaching 1 and re-clamped.
PaddedBundle post_generation_repair(const PaddedBundle &bundle);

// Smallest (pad_dim, knot_len) covering every surface in a corpus.
PreprocessConfig scan_corpus(const std::vector<NurbsSurface> &corpus);

}  // namespace nnrb
