#include "neuronurbs/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuronurbs/core.hpp"

namespace nnrb::io {

namespace {

constexpr char kMagic[4] = {'N', 'N', 'R', 'B'};
constexpr std::uint16_t kVersion = 1;

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string &path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
  }
  void bytes(const void *p, std::size_t n) {
    out.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
  }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string &s) {
    std::uint32_t len = static_cast<std::uint32_t>(s.size());
    bytes(&len, 4);
    bytes(s.data(), s.size());
  }
  void header(FileKind kind, std::uint64_t count, std::uint64_t cfg_a, std::uint64_t cfg_b) {
    bytes(kMagic, 4);
    u16(kVersion);
    std::uint8_t k = static_cast<std::uint8_t>(kind);
    bytes(&k, 1);
    std::uint8_t zero = 0;
    bytes(&zero, 1);
    u64(count);
    u64(cfg_a);
    u64(cfg_b);
  }
};

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string &p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("io: cannot open for reading: " + p);
  }
  void bytes(void *p, std::size_t n) {
    in.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("io: truncated file (count mismatch): " + path);
  }
  std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    std::uint32_t len; bytes(&len, 4);
    std::string s(len, '\0');
    bytes(s.data(), len);
    return s;
  }
  std::uint64_t header(FileKind expect, std::uint64_t *cfg_a, std::uint64_t *cfg_b) {
    char magic[4];
    bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
      throw std::runtime_error("io: bad magic: " + path);
    if (u16() != kVersion) throw std::runtime_error("io: version mismatch: " + path);
    std::uint8_t kind, reserved;
    bytes(&kind, 1);
    bytes(&reserved, 1);
    if (kind != static_cast<std::uint8_t>(expect))
      throw std::runtime_error("io: wrong file kind: " + path);
    std::uint64_t count = u64(), a = u64(), b = u64();
    if (cfg_a) *cfg_a = a;
    if (cfg_b) *cfg_b = b;
    return count;
  }
  void expect_eof() {
    char c;
    in.read(&c, 1);
    if (!in.eof()) throw std::runtime_error("io: trailing bytes (count mismatch): " + path);
  }
};

}  // namespace

void write_nurbs_corpus(const std::string &path, const std::vector<NurbsSurface> &corpus) {
  Writer w(path);
  w.header(FileKind::kNurbs, corpus.size(), 0, 0);
  for (const NurbsSurface &s : corpus) {
    s.validate();
    w.u64(s.num_ctrl_u());
    w.u64(s.num_ctrl_v());
    w.u64(s.knots_u.size());
    w.u64(s.knots_v.size());
    w.f64(double(s.degree_u));
    w.f64(double(s.degree_v));
    for (double t : s.knots_u.values()) w.f64(t);
    for (double t : s.knots_v.values()) w.f64(t);
    for (const Vec3 &p : s.control_points.data) { w.f64(p.x); w.f64(p.y); w.f64(p.z); }
    for (double wt : s.weights.data) w.f64(wt);
  }
}

std::vector<NurbsSurface> read_nurbs_corpus(const std::string &path) {
  Reader r(path);
  std::uint64_t count = r.header(FileKind::kNurbs, nullptr, nullptr);
  std::vector<NurbsSurface> out;
  out.reserve(count);
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    std::uint64_t n = r.u64(), m = r.u64(), lu = r.u64(), lv = r.u64();
    NurbsSurface s;
    s.degree_u = static_cast<int>(r.f64());
    s.degree_v = static_cast<int>(r.f64());
    std::vector<double> ku(lu), kv(lv);
    for (double &t : ku) t = r.f64();
    for (double &t : kv) t = r.f64();
    s.knots_u = KnotVector(ku);
    s.knots_v = KnotVector(kv);
    s.control_points = Grid<Vec3>(n, m);
    for (Vec3 &p : s.control_points.data) { p.x = r.f64(); p.y = r.f64(); p.z = r.f64(); }
    s.weights = Grid<double>(n, m);
    for (double &wt : s.weights.data) wt = r.f64();
    s.validate();
    out.push_back(std::move(s));
  }
  r.expect_eof();
  return out;
}

void write_uvgrid_corpus(const std::string &path, const std::vector<UvGrid> &corpus) {
  Writer w(path);
  w.header(FileKind::kUvGrid, corpus.size(), 0, 0);
  for (const UvGrid &g : corpus) {
    w.u64(g.points.rows);
    w.u64(g.points.cols);
    w.f64(g.u_min); w.f64(g.u_max); w.f64(g.v_min); w.f64(g.v_max);
    for (const Vec3 &p : g.points.data) { w.f64(p.x); w.f64(p.y); w.f64(p.z); }
  }
}

std::vector<UvGrid> read_uvgrid_corpus(const std::string &path) {
  Reader r(path);
  std::uint64_t count = r.header(FileKind::kUvGrid, nullptr, nullptr);
  std::vector<UvGrid> out;
  out.reserve(count);
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    UvGrid g;
    std::uint64_t n = r.u64(), m = r.u64();
    g.u_min = r.f64(); g.u_max = r.f64(); g.v_min = r.f64(); g.v_max = r.f64();
    g.points = Grid<Vec3>(n, m);
    for (Vec3 &p : g.points.data) { p.x = r.f64(); p.y = r.f64(); p.z = r.f64(); }
    out.push_back(std::move(g));
  }
  r.expect_eof();
  return out;
}

void write_bundle_corpus(const std::string &path, const std::vector<PaddedBundle> &corpus) {
  Writer w(path);
  std::uint64_t d = corpus.empty() ? 0 : corpus.front().pad_dim;
  std::uint64_t k = corpus.empty() ? 0 : corpus.front().knot_len;
  w.header(FileKind::kBundle, corpus.size(), d, k);
  for (const PaddedBundle &b : corpus) {
    if (b.pad_dim != d || b.knot_len != k)
      throw std::invalid_argument("io: mixed bundle dims in one corpus");
    w.u64(b.true_n);
    w.u64(b.true_m);
    w.u64(b.true_knot_len_u);
    w.u64(b.true_knot_len_v);
    for (double v : b.p_w) w.f64(v);
    for (double v : b.knots_u) w.f64(v);
    for (double v : b.knots_v) w.f64(v);
  }
}

std::vector<PaddedBundle> read_bundle_corpus(const std::string &path) {
  Reader r(path);
  std::uint64_t d = 0, k = 0;
  std::uint64_t count = r.header(FileKind::kBundle, &d, &k);
  std::vector<PaddedBundle> out;
  out.reserve(count);
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    PaddedBundle b;
    b.pad_dim = d;
    b.knot_len = k;
    b.true_n = r.u64();
    b.true_m = r.u64();
    b.true_knot_len_u = r.u64();
    b.true_knot_len_v = r.u64();
    b.p_w.resize(d * d * 4);
    b.knots_u.resize(k);
    b.knots_v.resize(k);
    for (double &v : b.p_w) v = r.f64();
    for (double &v : b.knots_u) v = r.f64();
    for (double &v : b.knots_v) v = r.f64();
    b.mask.assign(d * d, false);
    for (std::size_t i = 0; i < b.true_n; ++i)
      for (std::size_t j = 0; j < b.true_m; ++j) b.mask[i * d + j] = true;
    out.push_back(std::move(b));
  }
  r.expect_eof();
  return out;
}

void write_feature_corpus(const std::string &path, const std::vector<NurbsFeature> &corpus) {
  Writer w(path);
  std::uint64_t dz = corpus.empty() ? 0 : corpus.front().z.size();
  w.header(FileKind::kFeature, corpus.size(), dz, 0);
  for (const NurbsFeature &f : corpus) {
    if (f.z.size() != dz || f.mu.size() != dz || f.log_var.size() != dz)
      throw std::invalid_argument("io: mixed feature dims in one corpus");
    for (double v : f.z) w.f64(v);
    for (double v : f.mu) w.f64(v);
    for (double v : f.log_var) w.f64(v);
  }
}

std::vector<NurbsFeature> read_feature_corpus(const std::string &path) {
  Reader r(path);
  std::uint64_t dz = 0;
  std::uint64_t count = r.header(FileKind::kFeature, &dz, nullptr);
  std::vector<NurbsFeature> out;
  out.reserve(count);
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    NurbsFeature f;
    f.z.resize(dz); f.mu.resize(dz); f.log_var.resize(dz);
    for (double &v : f.z) v = r.f64();
    for (double &v : f.mu) v = r.f64();
    for (double &v : f.log_var) v = r.f64();
    out.push_back(std::move(f));
  }
  r.expect_eof();
  return out;
}

void write_checkpoint(const std::string &path, const VaeModel &model) {
  Writer w(path);
  const VaeConfig &c = model.config();
  w.header(FileKind::kCheckpoint, model.params().size(), 0, 0);
  w.u64(c.pad_dim); w.u64(c.knot_len); w.u64(c.embed_dim);
  w.u64(c.num_layers); w.u64(c.num_heads); w.u64(c.latent_dim);
  w.f64(c.kl_weight); w.u64(c.seed);
  for (const auto &[name, t] : model.params()) {
    w.str(name);
    w.u64(t.rows);
    w.u64(t.cols);
    for (double v : t.value) w.f64(v);
  }
}

VaeModel read_checkpoint(const std::string &path) {
  Reader r(path);
  std::uint64_t count = r.header(FileKind::kCheckpoint, nullptr, nullptr);
  VaeConfig c;
  c.pad_dim = r.u64(); c.knot_len = r.u64(); c.embed_dim = r.u64();
  c.num_layers = r.u64(); c.num_heads = r.u64(); c.latent_dim = r.u64();
  c.kl_weight = r.f64(); c.seed = r.u64();
  VaeModel model(c);
  if (count != model.params().size())
    throw std::runtime_error("io: checkpoint tensor count mismatch: " + path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    auto it = model.params().find(name);
    if (it == model.params().end())
      throw std::runtime_error("io: unknown checkpoint tensor: " + name);
    std::uint64_t rows = r.u64(), cols = r.u64();
    if (rows != it->second.rows || cols != it->second.cols)
      throw std::runtime_error("io: checkpoint shape mismatch for " + name);
    for (double &v : it->second.value) v = r.f64();
  }
  r.expect_eof();
  return model;
}

std::size_t serialized_size(const NurbsSurface &s) {
  std::size_t n = s.num_ctrl_u(), m = s.num_ctrl_v();
  return 4 * 8                              // record header: dims + knot lengths
         + 2 * 8                            // degrees
         + (s.knots_u.size() + s.knots_v.size()) * 8
         + n * m * 3 * 8                    // control points
         + n * m * 8;                       // weights
}

std::size_t serialized_size(const UvGrid &g) {
  return 2 * 8 + 4 * 8 + g.points.rows * g.points.cols * 3 * 8;
}

std::string metric_report_text(const MetricReport &r) {
  std::ostringstream s;
  s.precision(17);
  s << "mmd " << r.mmd << "\n"
    << "coverage " << r.coverage << "\n"
    << "jsd " << r.jsd << "\n"
    << "generated_count " << r.generated_count << "\n"
    << "test_count " << r.test_count << "\n"
    << "voxel_resolution " << r.voxel_resolution << "\n";
  return s.str();
}

void write_metric_report(const std::string &path, const MetricReport &r) {
  nlohmann::json j{{"mmd", r.mmd},
                   {"coverage", r.coverage},
                   {"jsd", r.jsd},
                   {"generated_count", r.generated_count},
                   {"test_count", r.test_count},
                   {"voxel_resolution", r.voxel_resolution}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

MetricReport read_metric_report(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot open for reading: " + path);
  nlohmann::json j;
  in >> j;
  MetricReport r;
  r.mmd = j.at("mmd").get<double>();
  r.coverage = j.at("coverage").get<double>();
  r.jsd = j.at("jsd").get<double>();
  r.generated_count = j.at("generated_count").get<std::size_t>();
  r.test_count = j.at("test_count").get<std::size_t>();
  r.voxel_resolution = j.at("voxel_resolution").get<std::size_t>();
  return r;
}

std::string export_obj(const NurbsSurface &surface, std::size_t n, std::size_t m) {
  UvGrid grid = sample_uv_grid(surface, n, m);
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3 &p = grid.points.at(i, j);
      s << "v " << p.x << " " << p.y << " " << p.z << "\n";
    }
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j + 1 < m; ++j) {
      // 1-based, row-major
      std::size_t a = i * m + j + 1;
      std::size_t b = (i + 1) * m + j + 1;
      std::size_t c = (i + 1) * m + j + 2;
      std::size_t d = i * m + j + 2;
      s << "f " << a << " " << b << " " << c << " " << d << "\n";
    }
  return s.str();
}

}  // namespace nnrb::io
