#include <cmath>
#include <set>

#include <doctest.h>

#include "neuronurbs/core.hpp"
#include "neuronurbs/datagen.hpp"
#include "neuronurbs/metrics.hpp"
#include "neuronurbs/preprocess.hpp"

using namespace nnrb;

TEST_CASE("generate honors family counts and validity") {
  CorpusSpec spec;
  spec.planes = 5;
  spec.ruled = 4;
  spec.random_smooth = 6;
  spec.rational_arcs = 3;
  spec.seed = 401;
  std::vector<NurbsSurface> corpus = generate(spec);
  REQUIRE(corpus.size() == 18);
  for (const NurbsSurface &s : corpus) CHECK_NOTHROW(s.validate());
}

TEST_CASE("plane family is bilinear and coplanar") {
  CorpusSpec spec;
  spec.planes = 20;
  spec.seed = 403;
  for (const NurbsSurface &s : generate(spec)) {
    CHECK(s.degree_u == 1);
    CHECK(s.degree_v == 1);
    CHECK(s.num_ctrl_u() == 2);
    CHECK(s.num_ctrl_v() == 2);
    // coplanarity: the fourth corner lies in the plane of the other three
    Vec3 a = s.control_points.at(0, 0), b = s.control_points.at(1, 0);
    Vec3 c = s.control_points.at(0, 1), d = s.control_points.at(1, 1);
    Vec3 ab = b - a, ac = c - a, ad = d - a;
    Vec3 n{ab.y * ac.z - ab.z * ac.y, ab.z * ac.x - ab.x * ac.z,
           ab.x * ac.y - ab.y * ac.x};
    CHECK(std::fabs(dot(n, ad)) < 1e-9 * std::max(1.0, n.norm()));
  }
}

TEST_CASE("ruled family is linear in one direction") {
  CorpusSpec spec;
  spec.ruled = 15;
  spec.seed = 409;
  for (const NurbsSurface &s : generate(spec)) {
    CHECK(s.degree_u == 1);
    CHECK(s.degree_v == 3);
    // linearity along u: midpoint of the two rails
    for (int t = 0; t <= 8; ++t) {
      double v = double(t) / 8.0;
      Vec3 mid = (surface_eval(s, 0.0, v) + surface_eval(s, 1.0, v)) * 0.5;
      CHECK((surface_eval(s, 0.5, v) - mid).norm() < 1e-10);
    }
  }
}

TEST_CASE("random-smooth family stays within the control cap") {
  CorpusSpec spec;
  spec.random_smooth = 25;
  spec.max_ctrl = 6;
  spec.seed = 419;
  for (const NurbsSurface &s : generate(spec)) {
    CHECK(s.degree_u == 3);
    CHECK(s.degree_v == 3);
    CHECK(s.num_ctrl_u() >= 4);
    CHECK(s.num_ctrl_u() <= 6);
    CHECK(s.num_ctrl_v() <= 6);
  }
}

TEST_CASE("cylinder segment: exact distance from the axis") {
  double r = 1.7;
  NurbsSurface s = cylinder_segment(r, M_PI / 2.0, 3.0);
  CHECK(s.degree_u == 2);
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 6; ++j) {
      Vec3 p = surface_eval(s, double(i) / 20.0, double(j) / 6.0);
      double d = std::sqrt(p.x * p.x + p.y * p.y);
      CHECK(std::fabs(d - r) < 1e-10);
    }
  // the middle weight is cos(theta/2)
  CHECK(s.weights.at(1, 0) == doctest::Approx(std::cos(M_PI / 4.0)).epsilon(1e-15));
  // height sweep covers [0, 3]
  CHECK(std::fabs(surface_eval(s, 0.3, 0.0).z - 0.0) < 1e-12);
  CHECK(std::fabs(surface_eval(s, 0.3, 1.0).z - 3.0) < 1e-12);
}

TEST_CASE("arc family surfaces are genuinely rational") {
  CorpusSpec spec;
  spec.rational_arcs = 10;
  spec.seed = 421;
  for (const NurbsSurface &s : generate(spec)) {
    bool nonunit = false;
    for (double w : s.weights.data)
      if (std::fabs(w - 1.0) > 1e-12) nonunit = true;
    CHECK(nonunit);
  }
}

TEST_CASE("same seed reproduces the corpus bytewise") {
  CorpusSpec spec;
  spec.planes = 3;
  spec.ruled = 3;
  spec.random_smooth = 5;
  spec.rational_arcs = 2;
  spec.seed = 431;
  std::vector<NurbsSurface> a = generate(spec);
  std::vector<NurbsSurface> b = generate(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].control_points.data.size(); ++j) {
      CHECK(a[i].control_points.data[j].x == b[i].control_points.data[j].x);
      CHECK(a[i].control_points.data[j].y == b[i].control_points.data[j].y);
      CHECK(a[i].control_points.data[j].z == b[i].control_points.data[j].z);
    }
    CHECK(a[i].weights.data == b[i].weights.data);
    CHECK(a[i].knots_u.values() == b[i].knots_u.values());
  }
  spec.seed = 433;
  std::vector<NurbsSurface> c = generate(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i)
    if (a[i].control_points.data[0].x != c[i].control_points.data[0].x) differs = true;
  CHECK(differs);
}

TEST_CASE("every generated surface round-trips through preprocess") {
  CorpusSpec spec;
  spec.planes = 5;
  spec.ruled = 5;
  spec.random_smooth = 8;
  spec.rational_arcs = 4;
  spec.seed = 439;
  std::vector<NurbsSurface> corpus = generate(spec);
  PreprocessConfig cfg = scan_corpus(corpus);
  for (const NurbsSurface &s : corpus) {
    auto [norm, rec] = normalize(s);
    NurbsSurface back = denormalize(unpack(pack(norm, cfg)), rec);
    CHECK(back.degree_u == s.degree_u);
    CHECK(back.degree_v == s.degree_v);
    double err = 0.0;
    for (std::size_t i = 0; i < s.control_points.data.size(); ++i)
      err = std::max(err, (back.control_points.data[i] - s.control_points.data[i]).norm());
    CHECK(err < 1e-12);
  }
}

TEST_CASE("pure-plane corpus reports 100% in the lowest order bucket") {
  CorpusSpec spec;
  spec.planes = 12;
  spec.seed = 443;
  DegreeHistogram h = degree_histogram(generate(spec));
  CHECK(h.by_order_u[0] == 100.0);
  CHECK(h.by_order_v[0] == 100.0);
}

TEST_CASE("deduplicate drops exact repeats, keeps order") {
  CorpusSpec spec;
  spec.planes = 4;
  spec.random_smooth = 4;
  spec.seed = 449;
  std::vector<NurbsSurface> corpus = generate(spec);
  std::vector<NurbsSurface> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  // a power-of-two scale normalizes to bitwise-identical parameters
  NurbsSurface scaled = corpus[0];
  for (auto &p : scaled.control_points.data) p = p * 2.0;
  doubled.push_back(scaled);
  std::vector<NurbsSurface> unique = deduplicate(doubled);
  REQUIRE(unique.size() == corpus.size());
  for (std::size_t i = 0; i < unique.size(); ++i)
    CHECK(unique[i].control_points.data[0].x == corpus[i].control_points.data[0].x);
}

TEST_CASE("spec validation") {
  CorpusSpec empty;
  CHECK_THROWS_AS(generate(empty), std::invalid_argument);
  CorpusSpec bad;
  bad.planes = 1;
  bad.max_ctrl = 3;
  CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}
