#include "neuronurbs/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neuronurbs/core.hpp"

namespace nnrb {

namespace {

constexpr double kOneTol = 1e-9;
constexpr double kWeightFloor = 1e-4;

std::vector<double> rescale_knots(const KnotVector &kv, double &lo, double &range) {
  lo = kv.front();
  range = kv.back() - kv.front();
  std::vector<double> out;
  out.reserve(kv.size());
  for (double t : kv.values()) out.push_back((t - lo) / range);
  // end values exact after the affine map
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

}  // namespace

std::pair<NurbsSurface, NormalizationRecord> normalize(const NurbsSurface &surface) {
  surface.validate();
  NormalizationRecord rec;

  Vec3 lo{std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-lo.x, -lo.y, -lo.z};
  for (const Vec3 &p : surface.control_points.data) {
    lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
    lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
    lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
  }
  rec.mins = lo;
  rec.d_norm = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  if (!(rec.d_norm > 0.0))
    throw std::invalid_argument("normalize: degenerate surface, zero range on all axes");

  NurbsSurface out = surface;
  for (Vec3 &p : out.control_points.data) {
    p.x = (p.x - lo.x) / rec.d_norm;
    p.y = (p.y - lo.y) / rec.d_norm;
    p.z = (p.z - lo.z) / rec.d_norm;
  }

  rec.weight_scale = *std::max_element(out.weights.data.begin(), out.weights.data.end());
  for (double &w : out.weights.data) w /= rec.weight_scale;

  out.knots_u = KnotVector(rescale_knots(surface.knots_u, rec.u_min, rec.u_range));
  out.knots_v = KnotVector(rescale_knots(surface.knots_v, rec.v_min, rec.v_range));
  return {out, rec};
}

NurbsSurface denormalize(const NurbsSurface &surface, const NormalizationRecord &rec) {
  if (!(rec.d_norm > 0.0) || !(rec.weight_scale > 0.0))
    throw std::invalid_argument("denormalize: non-positive scale in record");
  NurbsSurface out = surface;
  for (Vec3 &p : out.control_points.data) {
    p.x = p.x * rec.d_norm + rec.mins.x;
    p.y = p.y * rec.d_norm + rec.mins.y;
    p.z = p.z * rec.d_norm + rec.mins.z;
  }
  for (double &w : out.weights.data) w *= rec.weight_scale;
  auto restore = [](const KnotVector &kv, double lo, double range) {
    std::vector<double> k;
    k.reserve(kv.size());
    for (double t : kv.values()) k.push_back(lo + t * range);
    return KnotVector(k);
  };
  out.knots_u = restore(surface.knots_u, rec.u_min, rec.u_range);
  out.knots_v = restore(surface.knots_v, rec.v_min, rec.v_range);
  return out;
}

PaddedBundle pack(const NurbsSurface &normalized, const PreprocessConfig &config) {
  config.validate();
  normalized.validate();
  const std::size_t n = normalized.num_ctrl_u();
  const std::size_t m = normalized.num_ctrl_v();
  if (n > config.pad_dim || m > config.pad_dim)
    throw std::invalid_argument("pack: control grid " + std::to_string(n) + "x" +
                                std::to_string(m) + " exceeds pad_dim " +
                                std::to_string(config.pad_dim));
  if (normalized.knots_u.size() > config.knot_len ||
      normalized.knots_v.size() > config.knot_len)
    throw std::invalid_argument("pack: knot vector exceeds knot_len " +
                                std::to_string(config.knot_len));

  PaddedBundle b;
  b.pad_dim = config.pad_dim;
  b.knot_len = config.knot_len;
  b.p_w.assign(b.pad_dim * b.pad_dim * 4, 0.0);
  b.knots_u.assign(b.knot_len, 0.0);
  b.knots_v.assign(b.knot_len, 0.0);
  b.mask.assign(b.pad_dim * b.pad_dim, false);
  b.true_n = n;
  b.true_m = m;
  b.true_knot_len_u = normalized.knots_u.size();
  b.true_knot_len_v = normalized.knots_v.size();

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3 &p = normalized.control_points.at(i, j);
      b.pw(i, j, 0) = p.x;
      b.pw(i, j, 1) = p.y;
      b.pw(i, j, 2) = p.z;
      b.pw(i, j, 3) = normalized.weights.at(i, j);
      b.mask[i * b.pad_dim + j] = true;
    }
  for (std::size_t i = 0; i < b.true_knot_len_u; ++i) b.knots_u[i] = normalized.knots_u[i];
  for (std::size_t i = 0; i < b.true_knot_len_v; ++i) b.knots_v[i] = normalized.knots_v[i];
  return b;
}

NurbsSurface unpack(const PaddedBundle &b) {
  std::size_t count = 0;
  for (bool on : b.mask) count += on ? 1 : 0;
  if (count != b.true_n * b.true_m)
    throw std::invalid_argument("unpack: mask/true_dims mismatch");

  auto [p, q] = infer_degrees(b.true_knot_len_u, b.true_knot_len_v, b.true_n, b.true_m);

  NurbsSurface s;
  s.degree_u = p;
  s.degree_v = q;
  s.knots_u = KnotVector(std::vector<double>(b.knots_u.begin(),
                                             b.knots_u.begin() + b.true_knot_len_u));
  s.knots_v = KnotVector(std::vector<double>(b.knots_v.begin(),
                                             b.knots_v.begin() + b.true_knot_len_v));
  s.control_points = Grid<Vec3>(b.true_n, b.true_m);
  s.weights = Grid<double>(b.true_n, b.true_m);
  for (std::size_t i = 0; i < b.true_n; ++i)
    for (std::size_t j = 0; j < b.true_m; ++j) {
      if (!b.masked_on(i, j)) throw std::invalid_argument("unpack: hole in mask block");
      s.control_points.at(i, j) = {b.pw(i, j, 0), b.pw(i, j, 1), b.pw(i, j, 2)};
      s.weights.at(i, j) = b.pw(i, j, 3);
    }
  s.validate();
  return s;
}

namespace {

PaddedBundle map_range(const PaddedBundle &b, bool forward) {
  const double lo = forward ? 0.0 : -1.0;
  auto check = [&](double x) {
    if (x < lo - kOneTol || x > 1.0 + kOneTol)
      throw std::invalid_argument("model-range: entry out of range");
  };
  PaddedBundle out = b;
  for (std::size_t i = 0; i < b.pad_dim; ++i)
    for (std::size_t j = 0; j < b.pad_dim; ++j) {
      if (!b.masked_on(i, j)) continue;
      for (std::size_t c = 0; c < 4; ++c) {
        double x = b.pw(i, j, c);
        check(x);
        out.pw(i, j, c) = forward ? 2.0 * x - 1.0 : (x + 1.0) / 2.0;
      }
    }
  for (std::size_t i = 0; i < b.true_knot_len_u; ++i) {
    check(b.knots_u[i]);
    out.knots_u[i] = forward ? 2.0 * b.knots_u[i] - 1.0 : (b.knots_u[i] + 1.0) / 2.0;
  }
  for (std::size_t i = 0; i < b.true_knot_len_v; ++i) {
    check(b.knots_v[i]);
    out.knots_v[i] = forward ? 2.0 * b.knots_v[i] - 1.0 : (b.knots_v[i] + 1.0) / 2.0;
  }
  return out;
}

// Clip at the first entry reaching 1, keep the sub-1 head (sorted to
// restore monotonicity), and complete the end-clamp run of 1s so the
// length fits n' + p + 1 with 1 <= p < n'. Prefers the caller's degree.
std::vector<double> repair_knots(const std::vector<double> &padded, std::size_t true_len,
                                 std::size_t active, int preferred_degree) {
  std::size_t first_one = true_len;
  for (std::size_t i = 0; i < true_len; ++i)
    if (padded[i] >= 1.0 - kOneTol) { first_one = i; break; }
  if (first_one == 0)
    throw std::runtime_error("repair: degenerate knot vector (no span below 1)");

  std::vector<double> head(padded.begin(), padded.begin() + first_one);
  std::sort(head.begin(), head.end());

  int p = preferred_degree;
  const int p_max = static_cast<int>(active) - 1;
  // head must fit: |head| <= n' + p
  const int p_min_fit = static_cast<int>(head.size()) - static_cast<int>(active);
  p = std::max({p, 1, p_min_fit});
  p = std::min(p, p_max);
  if (p < 1) throw std::runtime_error("repair: too few active control points");

  const std::size_t len = active + p + 1;
  if (head.size() > len - 1) head.resize(len - 1);
  while (head.size() < len) head.push_back(1.0);
  return head;
}

}  // namespace

PaddedBundle to_model_range(const PaddedBundle &b) { return map_range(b, true); }
PaddedBundle from_model_range(const PaddedBundle &b) { return map_range(b, false); }

PaddedBundle post_generation_repair(const PaddedBundle &b) {
  const std::size_t n = b.true_n, m = b.true_m;
  if (n == 0 || m == 0) throw std::invalid_argument("repair: empty true dims");

  // rows/columns whose weights are all <= 0 are dropped as a whole
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    bool alive = false;
    for (std::size_t j = 0; j < m; ++j)
      if (b.pw(i, j, 3) > 0.0) { alive = true; break; }
    if (alive) rows.push_back(i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    bool alive = false;
    for (std::size_t i = 0; i < n; ++i)
      if (b.pw(i, j, 3) > 0.0) { alive = true; break; }
    if (alive) cols.push_back(j);
  }
  if (rows.size() < 2 || cols.size() < 2)
    throw std::runtime_error("repair: fewer than 2 active control points in a direction");

  int p0 = static_cast<int>(b.true_knot_len_u) - static_cast<int>(n) - 1;
  int q0 = static_cast<int>(b.true_knot_len_v) - static_cast<int>(m) - 1;
  std::vector<double> ku = repair_knots(b.knots_u, b.true_knot_len_u, rows.size(), p0);
  std::vector<double> kv = repair_knots(b.knots_v, b.true_knot_len_v, cols.size(), q0);

  PaddedBundle out;
  out.pad_dim = b.pad_dim;
  out.knot_len = b.knot_len;
  out.p_w.assign(b.pad_dim * b.pad_dim * 4, 0.0);
  out.knots_u.assign(b.knot_len, 0.0);
  out.knots_v.assign(b.knot_len, 0.0);
  out.mask.assign(b.pad_dim * b.pad_dim, false);
  out.true_n = rows.size();
  out.true_m = cols.size();
  out.true_knot_len_u = ku.size();
  out.true_knot_len_v = kv.size();

  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (std::size_t c = 0; c < 3; ++c)
        out.pw(i, j, c) = b.pw(rows[i], cols[j], c);
      double w = b.pw(rows[i], cols[j], 3);
      out.pw(i, j, 3) = w > 0.0 ? w : kWeightFloor;
      out.mask[i * out.pad_dim + j] = true;
    }
  std::copy(ku.begin(), ku.end(), out.knots_u.begin());
  std::copy(kv.begin(), kv.end(), out.knots_v.begin());
  return out;
}

PreprocessConfig scan_corpus(const std::vector<NurbsSurface> &corpus) {
  PreprocessConfig cfg;
  cfg.pad_dim = 2;
  cfg.knot_len = 4;
  for (const NurbsSurface &s : corpus) {
    cfg.pad_dim = std::max({cfg.pad_dim, s.num_ctrl_u(), s.num_ctrl_v()});
    cfg.knot_len = std::max({cfg.knot_len, s.knots_u.size(), s.knots_v.size()});
  }
  return cfg;
}

}  // namespace nnrb
