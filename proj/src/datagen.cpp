#include "neuronurbs/datagen.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "neuronurbs/fitting.hpp"
#include "neuronurbs/preprocess.hpp"

namespace nnrb {

namespace {

NurbsSurface plane_patch(std::mt19937_64 &rng, double extent) {
  std::uniform_real_distribution<double> d(-extent, extent);
  Vec3 origin{d(rng), d(rng), d(rng)};
  Vec3 a{d(rng), d(rng), d(rng)}, b{d(rng), d(rng), d(rng)};
  if (a.norm() < 0.3) a.x += 1.0;
  if (b.norm() < 0.3) b.y += 1.0;
  NurbsSurface s;
  s.degree_u = s.degree_v = 1;
  s.knots_u = KnotVector({0, 0, 1, 1});
  s.knots_v = KnotVector({0, 0, 1, 1});
  s.control_points = Grid<Vec3>(2, 2);
  s.control_points.at(0, 0) = origin;
  s.control_points.at(1, 0) = origin + a;
  s.control_points.at(0, 1) = origin + b;
  s.control_points.at(1, 1) = origin + a + b;
  s.weights = Grid<double>(2, 2, 1.0);
  return s;
}

// linear in u, cubic profile in v
NurbsSurface ruled_patch(std::mt19937_64 &rng, double extent) {
  std::uniform_real_distribution<double> d(-extent, extent);
  NurbsSurface s;
  s.degree_u = 1;
  s.degree_v = 3;
  s.knots_u = KnotVector({0, 0, 1, 1});
  s.knots_v = uniform_clamped_knots(3, 4);
  s.control_points = Grid<Vec3>(2, 4);
  s.weights = Grid<double>(2, 4, 1.0);
  Vec3 offset{d(rng), d(rng), d(rng)};
  if (offset.norm() < 0.3) offset.z += 1.0;
  for (std::size_t j = 0; j < 4; ++j) {
    Vec3 p{double(j) / 3.0 * extent, d(rng), d(rng)};
    s.control_points.at(0, j) = p;
    s.control_points.at(1, j) = p + offset;
  }
  return s;
}

NurbsSurface smooth_patch(std::mt19937_64 &rng, double extent, std::size_t max_ctrl) {
  std::uniform_int_distribution<std::size_t> nd(4, max_ctrl);
  std::size_t n = nd(rng), m = nd(rng);
  // jitter small relative to cell size so the control net stays regular
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  std::uniform_real_distribution<double> zd(-0.4, 0.4);
  NurbsSurface s;
  s.degree_u = s.degree_v = 3;
  s.knots_u = uniform_clamped_knots(3, n);
  s.knots_v = uniform_clamped_knots(3, m);
  s.control_points = Grid<Vec3>(n, m);
  s.weights = Grid<double>(n, m, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      s.control_points.at(i, j) = {
          (double(i) / double(n - 1) + jitter(rng) / double(n - 1)) * extent,
          (double(j) / double(m - 1) + jitter(rng) / double(m - 1)) * extent,
          zd(rng) * extent};
  return s;
}

}  // namespace

NurbsSurface cylinder_segment(double radius, double theta, double height) {
  if (!(radius > 0.0) || !(height > 0.0) || !(theta > 0.0) || theta >= 3.141592653589793)
    throw std::invalid_argument("cylinder-segment: need r,h > 0 and 0 < theta < pi");
  const double half = 0.5 * theta;
  const double w_mid = std::cos(half);
  NurbsSurface s;
  s.degree_u = 2;
  s.degree_v = 1;
  s.knots_u = KnotVector({0, 0, 0, 1, 1, 1});
  s.knots_v = KnotVector({0, 0, 1, 1});
  s.control_points = Grid<Vec3>(3, 2);
  s.weights = Grid<double>(3, 2, 1.0);
  Vec3 p0{radius * std::cos(-half), radius * std::sin(-half), 0.0};
  Vec3 p2{radius * std::cos(half), radius * std::sin(half), 0.0};
  Vec3 p1{radius / std::cos(half), 0.0, 0.0};  // intersection of end tangents
  const Vec3 lift{0.0, 0.0, height};
  for (std::size_t j = 0; j < 2; ++j) {
    Vec3 up = lift * double(j);
    s.control_points.at(0, j) = p0 + up;
    s.control_points.at(1, j) = p1 + up;
    s.control_points.at(2, j) = p2 + up;
    s.weights.at(1, j) = w_mid;
  }
  return s;
}

std::vector<NurbsSurface> generate(const CorpusSpec &spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<NurbsSurface> out;
  out.reserve(spec.planes + spec.ruled + spec.random_smooth + spec.rational_arcs);
  for (std::size_t i = 0; i < spec.planes; ++i) out.push_back(plane_patch(rng, spec.extent));
  for (std::size_t i = 0; i < spec.ruled; ++i) out.push_back(ruled_patch(rng, spec.extent));
  for (std::size_t i = 0; i < spec.random_smooth; ++i)
    out.push_back(smooth_patch(rng, spec.extent, spec.max_ctrl));
  std::uniform_real_distribution<double> td(0.5, 2.8), rd(0.3, 1.5), hd(0.5, 2.0);
  for (std::size_t i = 0; i < spec.rational_arcs; ++i)
    out.push_back(cylinder_segment(rd(rng) * spec.extent, td(rng), hd(rng) * spec.extent));
  for (const NurbsSurface &s : out) s.validate();
  return out;
}

std::vector<NurbsSurface> deduplicate(const std::vector<NurbsSurface> &corpus) {
  std::vector<NurbsSurface> out;
  std::set<std::string> seen;
  for (const NurbsSurface &s : corpus) {
    auto [norm, rec] = normalize(s);
    std::string key;
    auto put = [&key](double v) {
      key.append(reinterpret_cast<const char *>(&v), sizeof(double));
    };
    put(double(norm.degree_u));
    put(double(norm.degree_v));
    for (double t : norm.knots_u.values()) put(t);
    for (double t : norm.knots_v.values()) put(t);
    for (const Vec3 &p : norm.control_points.data) { put(p.x); put(p.y); put(p.z); }
    for (double w : norm.weights.data) put(w);
    if (seen.insert(key).second) out.push_back(s);
  }
  return out;
}

}  // namespace nnrb
