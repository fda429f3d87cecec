#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include <doctest.h>

#include "neuronurbs/core.hpp"
#include "neuronurbs/datagen.hpp"
#include "neuronurbs/io.hpp"
#include "neuronurbs/preprocess.hpp"

using namespace nnrb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() : dir(fs::temp_directory_path() / ("nnrb_io_test_" + std::to_string(::getpid()))) {
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string file(const std::string &name) const { return (dir / name).string(); }
};

std::vector<NurbsSurface> small_corpus(std::uint64_t seed) {
  CorpusSpec spec;
  spec.planes = 3;
  spec.ruled = 2;
  spec.random_smooth = 3;
  spec.rational_arcs = 2;
  spec.seed = seed;
  return generate(spec);
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool surfaces_equal(const NurbsSurface &a, const NurbsSurface &b) {
  if (a.degree_u != b.degree_u || a.degree_v != b.degree_v) return false;
  if (a.knots_u.values() != b.knots_u.values()) return false;
  if (a.knots_v.values() != b.knots_v.values()) return false;
  if (a.weights.data != b.weights.data) return false;
  for (std::size_t i = 0; i < a.control_points.data.size(); ++i) {
    const Vec3 &p = a.control_points.data[i], &q = b.control_points.data[i];
    if (p.x != q.x || p.y != q.y || p.z != q.z) return false;
  }
  return true;
}

// Minimal OBJ reader sufficient for the exporter's output.
void parse_obj(const std::string &text, std::vector<Vec3> &verts,
               std::vector<std::array<std::size_t, 4>> &faces) {
  std::istringstream in(text);
  std::string tag;
  while (in >> tag) {
    if (tag == "v") {
      Vec3 p;
      in >> p.x >> p.y >> p.z;
      verts.push_back(p);
    } else if (tag == "f") {
      std::array<std::size_t, 4> f{};
      in >> f[0] >> f[1] >> f[2] >> f[3];
      faces.push_back(f);
    }
  }
}

const char *kSimpleStep = R"(ISO-10303-21;
HEADER; FILE_DESCRIPTION(('fixture'),'2;1'); ENDSEC;
DATA;
#1=CARTESIAN_POINT('',(0.,0.,0.));
#2=CARTESIAN_POINT('',(1.,0.,0.5));
#3=CARTESIAN_POINT('',(2.,0.,0.5));
#4=CARTESIAN_POINT('',(3.,0.,0.));
#5=CARTESIAN_POINT('',(0.,1.,1.));
#6=CARTESIAN_POINT('',(1.,1.,1.5));
#7=CARTESIAN_POINT('',(2.,1.,1.5));
#8=CARTESIAN_POINT('',(3.,1.,1.));
#9=CARTESIAN_POINT('',(0.,2.,1.));
#10=CARTESIAN_POINT('',(1.,2.,1.5));
#11=CARTESIAN_POINT('',(2.,2.,1.5));
#12=CARTESIAN_POINT('',(3.,2.,1.));
#13=CARTESIAN_POINT('',(0.,3.,0.));
#14=CARTESIAN_POINT('',(1.,3.,0.5));
#15=CARTESIAN_POINT('',(2.,3.,0.5));
#16=CARTESIAN_POINT('',(3.,3.,0.));
#20=B_SPLINE_SURFACE_WITH_KNOTS('patch',3,3,((#1,#2,#3,#4),(#5,#6,#7,#8),
  (#9,#10,#11,#12),(#13,#14,#15,#16)),.UNSPECIFIED.,.F.,.F.,.F.,
  (4,4),(4,4),(0.,1.),(0.,1.),.UNSPECIFIED.);
#30=CYLINDRICAL_SURFACE('',#1,1.5);
#31=PLANE('',#1);
ENDSEC;
END-ISO-10303-21;
)";

// Complex rational entity: exact quarter-circle arc (weights 1, cos45, 1)
// swept along z.
const char *kRationalStep = R"(ISO-10303-21;
DATA;
#1=CARTESIAN_POINT('',(1.,0.,0.));
#2=CARTESIAN_POINT('',(1.,1.,0.));
#3=CARTESIAN_POINT('',(0.,1.,0.));
#4=CARTESIAN_POINT('',(1.,0.,2.));
#5=CARTESIAN_POINT('',(1.,1.,2.));
#6=CARTESIAN_POINT('',(0.,1.,2.));
#10=( BOUNDED_SURFACE() B_SPLINE_SURFACE(2,1,((#1,#4),(#2,#5),(#3,#6)),
  .UNSPECIFIED.,.F.,.F.,.F.) B_SPLINE_SURFACE_WITH_KNOTS((3,3),(2,2),(0.,1.),
  (0.,1.),.UNSPECIFIED.) GEOMETRIC_REPRESENTATION_ITEM()
  RATIONAL_B_SPLINE_SURFACE(((1.,1.),(0.70710678118654752,0.70710678118654752),
  (1.,1.))) REPRESENTATION_ITEM('') SURFACE() );
ENDSEC;
)";

// Multiplicity expansion fixture: p=2, 4x2 points, U mults (3,1,3) over
// knots (0, 0.5, 1) -> hand-expanded [0,0,0,0.5,1,1,1].
const char *kMultStep = R"(DATA;
#1=CARTESIAN_POINT('',(0.,0.,0.));
#2=CARTESIAN_POINT('',(0.,1.,0.));
#3=CARTESIAN_POINT('',(1.,0.,1.));
#4=CARTESIAN_POINT('',(1.,1.,1.));
#5=CARTESIAN_POINT('',(2.,0.,1.));
#6=CARTESIAN_POINT('',(2.,1.,1.));
#7=CARTESIAN_POINT('',(3.,0.,0.));
#8=CARTESIAN_POINT('',(3.,1.,0.));
#9=B_SPLINE_SURFACE_WITH_KNOTS('',2,1,((#1,#2),(#3,#4),(#5,#6),(#7,#8)),
  .UNSPECIFIED.,.F.,.F.,.F.,(3,1,3),(2,2),(0.,0.5,1.),(0.,1.),.UNSPECIFIED.);
ENDSEC;
)";

}  // namespace

TEST_CASE("nurbs corpus round-trip is exact and canonical") {
  TempDir tmp;
  std::vector<NurbsSurface> corpus = small_corpus(501);
  std::string p1 = tmp.file("a.nnrb"), p2 = tmp.file("b.nnrb");
  io::write_nurbs_corpus(p1, corpus);
  std::vector<NurbsSurface> back = io::read_nurbs_corpus(p1);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(surfaces_equal(corpus[i], back[i]));
  io::write_nurbs_corpus(p2, back);
  CHECK(slurp(p1) == slurp(p2));  // bytewise canonical re-serialization
}

TEST_CASE("uvgrid corpus round-trip") {
  TempDir tmp;
  std::vector<UvGrid> grids;
  for (const NurbsSurface &s : small_corpus(503)) grids.push_back(sample_uv_grid(s, 8, 6));
  std::string p = tmp.file("g.nnrb");
  io::write_uvgrid_corpus(p, grids);
  std::vector<UvGrid> back = io::read_uvgrid_corpus(p);
  REQUIRE(back.size() == grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    CHECK(back[i].points.rows == grids[i].points.rows);
    CHECK(back[i].u_max == grids[i].u_max);
    for (std::size_t j = 0; j < grids[i].points.data.size(); ++j)
      CHECK((back[i].points.data[j] - grids[i].points.data[j]).norm() == 0.0);
  }
}

TEST_CASE("bundle corpus round-trip rebuilds masks") {
  TempDir tmp;
  std::vector<PaddedBundle> bundles;
  PreprocessConfig cfg{8, 12};
  for (const NurbsSurface &s : small_corpus(509)) {
    auto [norm, rec] = normalize(s);
    bundles.push_back(pack(norm, cfg));
  }
  std::string p = tmp.file("b.nnrb");
  io::write_bundle_corpus(p, bundles);
  std::vector<PaddedBundle> back = io::read_bundle_corpus(p);
  REQUIRE(back.size() == bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    CHECK(back[i].p_w == bundles[i].p_w);
    CHECK(back[i].knots_u == bundles[i].knots_u);
    CHECK(back[i].mask == bundles[i].mask);
    CHECK(back[i].true_n == bundles[i].true_n);
    CHECK(surfaces_equal(unpack(back[i]), unpack(bundles[i])));
  }
}

TEST_CASE("feature corpus stores d_z=48 vectors for the default config") {
  TempDir tmp;
  std::vector<NurbsFeature> feats(5);
  std::mt19937_64 rng(521);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (NurbsFeature &f : feats) {
    f.z.resize(48);
    f.mu.resize(48);
    f.log_var.resize(48);
    for (double &v : f.z) v = ud(rng);
    for (double &v : f.mu) v = ud(rng);
    for (double &v : f.log_var) v = ud(rng);
  }
  std::string p = tmp.file("f.nnrb");
  io::write_feature_corpus(p, feats);
  std::vector<NurbsFeature> back = io::read_feature_corpus(p);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].z.size() == 48);
    CHECK(back[i].z == feats[i].z);
    CHECK(back[i].mu == feats[i].mu);
    CHECK(back[i].log_var == feats[i].log_var);
  }
}

TEST_CASE("corrupt container files are rejected with the right errors") {
  TempDir tmp;
  std::vector<NurbsSurface> corpus = small_corpus(523);
  std::string p = tmp.file("c.nnrb");
  io::write_nurbs_corpus(p, corpus);

  std::string bytes = slurp(p);
  auto rewrite = [&](const std::string &content) {
    std::ofstream out(p, std::ios::binary);
    out.write(content.data(), std::streamsize(content.size()));
  };

  rewrite(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_WITH_AS(io::read_nurbs_corpus(p),
                       doctest::Contains("io: truncated file"), std::runtime_error);

  std::string extra = bytes + "xx";
  rewrite(extra);
  CHECK_THROWS_WITH_AS(io::read_nurbs_corpus(p),
                       doctest::Contains("io: trailing bytes"), std::runtime_error);

  std::string bad = bytes;
  bad[0] = 'X';
  rewrite(bad);
  CHECK_THROWS_WITH_AS(io::read_nurbs_corpus(p), doctest::Contains("io: bad magic"),
                       std::runtime_error);

  std::string ver = bytes;
  ver[4] = 9;
  rewrite(ver);
  CHECK_THROWS_WITH_AS(io::read_nurbs_corpus(p), doctest::Contains("io: version mismatch"),
                       std::runtime_error);

  rewrite(bytes);
  CHECK_THROWS_WITH_AS(io::read_uvgrid_corpus(p), doctest::Contains("io: wrong file kind"),
                       std::runtime_error);
  CHECK_THROWS_AS(io::read_nurbs_corpus(tmp.file("missing.nnrb")), std::runtime_error);
}

TEST_CASE("serialized_size matches the pinned layout arithmetic") {
  NurbsSurface plane;
  plane.degree_u = plane.degree_v = 1;
  plane.knots_u = KnotVector({0, 0, 1, 1});
  plane.knots_v = KnotVector({0, 0, 1, 1});
  plane.control_points = Grid<Vec3>(2, 2);
  plane.control_points.at(1, 1) = {1, 1, 0};
  plane.control_points.at(1, 0) = {1, 0, 0};
  plane.control_points.at(0, 1) = {0, 1, 0};
  plane.weights = Grid<double>(2, 2, 1.0);
  // 4*3*8 points + 4*8 weights + 8*8 knots + 2*8 degrees = 208 payload
  CHECK(io::serialized_size(plane) == 208 + 4 * 8);

  UvGrid g;
  g.points = Grid<Vec3>(32, 32);
  // 32*32*3*8 = 24576 payload + fixed record header
  CHECK(io::serialized_size(g) == 24576 + 6 * 8);

  // on-disk check: file size = 32-byte file header + sum of record sizes
  TempDir tmp;
  std::string p = tmp.file("sz.nnrb");
  io::write_nurbs_corpus(p, {plane, plane});
  CHECK(fs::file_size(p) == 32 + 2 * io::serialized_size(plane));
  std::string q = tmp.file("szg.nnrb");
  g.points.at(0, 0) = {0, 0, 0};
  io::write_uvgrid_corpus(q, {g});
  CHECK(fs::file_size(q) == 32 + io::serialized_size(g));

  // the compression story: plane record well under a tenth of its grid
  CHECK(double(io::serialized_size(plane)) < 0.1 * double(io::serialized_size(g)));
}

TEST_CASE("metric report text and JSON round-trip") {
  MetricReport r;
  r.mmd = 0.012345678901234567;
  r.coverage = 0.75;
  r.jsd = 0.333;
  r.generated_count = 40;
  r.test_count = 50;
  r.voxel_resolution = 28;
  std::string text = io::metric_report_text(r);
  CHECK(text.find("mmd 0.012345678901234567") != std::string::npos);
  CHECK(text.find("coverage 0.75") != std::string::npos);
  CHECK(text.find("voxel_resolution 28") != std::string::npos);

  TempDir tmp;
  std::string p = tmp.file("report.json");
  io::write_metric_report(p, r);
  MetricReport back = io::read_metric_report(p);
  CHECK(back.mmd == r.mmd);
  CHECK(back.coverage == r.coverage);
  CHECK(back.jsd == r.jsd);
  CHECK(back.generated_count == 40);
  CHECK(back.test_count == 50);
}

TEST_CASE("export_obj emits the sampled grid with quad faces") {
  NurbsSurface s = small_corpus(541)[0];
  std::string text = io::export_obj(s, 5, 4);
  std::vector<Vec3> verts;
  std::vector<std::array<std::size_t, 4>> faces;
  parse_obj(text, verts, faces);
  REQUIRE(verts.size() == 20);
  REQUIRE(faces.size() == 4 * 3);
  UvGrid g = sample_uv_grid(s, 5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK((verts[i * 4 + j] - g.points.at(i, j)).norm() == 0.0);
  for (const auto &f : faces) {
    for (std::size_t idx : f) {
      CHECK(idx >= 1);
      CHECK(idx <= verts.size());
    }
    // each quad spans two adjacent rows
    CHECK(f[1] == f[0] + 4);
    CHECK(f[2] == f[0] + 5);
    CHECK(f[3] == f[0] + 1);
  }
}

TEST_CASE("checkpoint round-trip restores config and every tensor") {
  VaeConfig cfg;
  cfg.pad_dim = 3;
  cfg.knot_len = 5;
  cfg.embed_dim = 8;
  cfg.num_layers = 1;
  cfg.num_heads = 2;
  cfg.latent_dim = 4;
  cfg.kl_weight = 0.25;
  cfg.seed = 99;
  VaeModel model(cfg);
  TempDir tmp;
  std::string p = tmp.file("model.nnrb");
  io::write_checkpoint(p, model);
  VaeModel back = io::read_checkpoint(p);
  CHECK(back.config().pad_dim == 3);
  CHECK(back.config().knot_len == 5);
  CHECK(back.config().embed_dim == 8);
  CHECK(back.config().kl_weight == 0.25);
  CHECK(back.config().seed == 99);
  REQUIRE(back.params().size() == model.params().size());
  for (const auto &[name, t] : model.params()) {
    auto it = back.params().find(name);
    REQUIRE(it != back.params().end());
    CHECK(it->second.value == t.value);
  }
}

TEST_CASE("STEP: non-rational bicubic fixture extracts exactly") {
  io::StepExtraction ex = io::extract_step_surfaces(kSimpleStep);
  REQUIRE(ex.surfaces.size() == 1);
  const NurbsSurface &s = ex.surfaces[0];
  CHECK(s.degree_u == 3);
  CHECK(s.degree_v == 3);
  CHECK(s.num_ctrl_u() == 4);
  CHECK(s.num_ctrl_v() == 4);
  for (double w : s.weights.data) CHECK(w == 1.0);
  // hand-expanded knot sequence for mults (4,4) over (0,1)
  std::vector<double> expect{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(s.knots_u.values() == expect);
  CHECK(s.knots_v.values() == expect);
  CHECK(s.control_points.at(0, 0).x == 0.0);
  CHECK(s.control_points.at(1, 2).x == 2.0);
  CHECK(s.control_points.at(1, 2).y == 1.0);
  CHECK(s.control_points.at(1, 2).z == 1.5);
  CHECK(ex.skipped.at("CYLINDRICAL_SURFACE") == 1);
  CHECK(ex.skipped.at("PLANE") == 1);
}

TEST_CASE("STEP: complex rational entity yields the exact cylinder patch") {
  io::StepExtraction ex = io::extract_step_surfaces(kRationalStep);
  REQUIRE(ex.surfaces.size() == 1);
  const NurbsSurface &s = ex.surfaces[0];
  CHECK(s.degree_u == 2);
  CHECK(s.degree_v == 1);
  CHECK(s.weights.at(1, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 4; ++j) {
      Vec3 p = surface_eval(s, i / 10.0, j / 4.0);
      CHECK(std::fabs(std::sqrt(p.x * p.x + p.y * p.y) - 1.0) < 1e-12);
    }
}

TEST_CASE("STEP: knot multiplicities expand to the hand-computed sequence") {
  io::StepExtraction ex = io::extract_step_surfaces(kMultStep);
  REQUIRE(ex.surfaces.size() == 1);
  std::vector<double> expect{0, 0, 0, 0.5, 1, 1, 1};
  CHECK(ex.surfaces[0].knots_u.values() == expect);
  CHECK(ex.surfaces[0].knots_v.values() == std::vector<double>{0, 0, 1, 1});
}

TEST_CASE("STEP error classes: dangling ref, truncation, count mismatch") {
  CHECK_THROWS_WITH_AS(io::extract_step_surfaces("no data section here"),
                       "step-parse: no DATA section found", std::runtime_error);

  std::string dangling = R"(DATA;
#1=CARTESIAN_POINT('',(0.,0.,0.));
#9=B_SPLINE_SURFACE_WITH_KNOTS('',1,1,((#1,#2),(#3,#4)),.UNSPECIFIED.,.F.,.F.,.F.,
  (2,2),(2,2),(0.,1.),(0.,1.),.UNSPECIFIED.);
ENDSEC;)";
  CHECK_THROWS_WITH_AS(io::extract_step_surfaces(dangling),
                       doctest::Contains("step-entity: #9: dangling reference #2"),
                       std::runtime_error);

  std::string truncated = "DATA;\n#1=CARTESIAN_POINT('',(0.,0.,0.)";
  CHECK_THROWS_WITH_AS(io::extract_step_surfaces(truncated),
                       doctest::Contains("step-parse:"), std::runtime_error);

  std::string badmult = R"(DATA;
#1=CARTESIAN_POINT('',(0.,0.,0.));
#2=CARTESIAN_POINT('',(1.,0.,0.));
#3=CARTESIAN_POINT('',(0.,1.,0.));
#4=CARTESIAN_POINT('',(1.,1.,0.));
#9=B_SPLINE_SURFACE_WITH_KNOTS('',1,1,((#1,#2),(#3,#4)),.UNSPECIFIED.,.F.,.F.,.F.,
  (3,2),(2,2),(0.,1.),(0.,1.),.UNSPECIFIED.);
ENDSEC;)";
  CHECK_THROWS_WITH_AS(io::extract_step_surfaces(badmult),
                       doctest::Contains("step-entity: #9"), std::runtime_error);

  std::string dup = "DATA;\n#1=CARTESIAN_POINT('',(0.,0.,0.));\n#1=PLANE('',#1);\nENDSEC;";
  CHECK_THROWS_WITH_AS(io::extract_step_surfaces(dup),
                       doctest::Contains("duplicate entity id"), std::runtime_error);
}

TEST_CASE("STEP surfaces survive the preprocess pipeline") {
  io::StepExtraction ex = io::extract_step_surfaces(kSimpleStep);
  auto [norm, rec] = normalize(ex.surfaces[0]);
  NurbsSurface back = denormalize(unpack(pack(norm, scan_corpus(ex.surfaces))), rec);
  CHECK(back.degree_u == 3);
  double err = 0.0;
  for (std::size_t i = 0; i < back.control_points.data.size(); ++i)
    err = std::max(err,
                   (back.control_points.data[i] - ex.surfaces[0].control_points.data[i]).norm());
  CHECK(err < 1e-12);
}
