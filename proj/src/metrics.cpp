#include "neuronurbs/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "neuronurbs/fitting.hpp"
#include "neuronurbs/preprocess.hpp"

namespace nnrb {

namespace {

double nearest_sq(const Vec3 &p, const PointCloud &cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3 &q : cloud.points) best = std::min(best, (p - q).norm2());
  return best;
}

// deterministic chunked parallel map over [0, n)
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min(metric_thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto &t : pool) t.join();
}

std::vector<double> voxel_histogram(const std::vector<PointCloud> &set,
                                    std::size_t resolution) {
  std::vector<double> hist(resolution * resolution * resolution, 0.0);
  double total = 0.0;
  for (const PointCloud &cloud : set)
    for (const Vec3 &p : cloud.points) {
      if (p.x < -1e-9 || p.x > 1.0 + 1e-9 || p.y < -1e-9 || p.y > 1.0 + 1e-9 ||
          p.z < -1e-9 || p.z > 1.0 + 1e-9)
        throw std::invalid_argument("jsd: point outside unit cube; normalize first");
      auto bin = [&](double c) {
        auto i = static_cast<std::size_t>(std::clamp(c, 0.0, 1.0) * double(resolution));
        return std::min(i, resolution - 1);
      };
      hist[(bin(p.x) * resolution + bin(p.y)) * resolution + bin(p.z)] += 1.0;
      total += 1.0;
    }
  if (total > 0.0)
    for (double &h : hist) h /= total;
  return hist;
}

int order_bucket(int order) { return std::clamp(order, 2, 5) - 2; }

}  // namespace

std::size_t metric_thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("NNRB_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
  }
  return n;
}

double chamfer(const PointCloud &a, const PointCloud &b) {
  if (a.points.empty() || b.points.empty())
    throw std::invalid_argument("chamfer: empty point cloud");
  double ab = 0.0, ba = 0.0;
  for (const Vec3 &p : a.points) ab += nearest_sq(p, b);
  for (const Vec3 &q : b.points) ba += nearest_sq(q, a);
  return ab / double(a.points.size()) + ba / double(b.points.size());
}

double mmd(const std::vector<PointCloud> &generated, const std::vector<PointCloud> &test) {
  if (generated.empty() || test.empty()) throw std::invalid_argument("mmd: empty set");
  std::vector<double> mins(test.size());
  parallel_for(test.size(), [&](std::size_t t) {
    double best = std::numeric_limits<double>::infinity();
    for (const PointCloud &g : generated) best = std::min(best, chamfer(test[t], g));
    mins[t] = best;
  });
  double s = 0.0;
  for (double m : mins) s += m;
  return s / double(test.size());
}

double coverage(const std::vector<PointCloud> &generated,
                const std::vector<PointCloud> &test) {
  if (generated.empty() || test.empty()) throw std::invalid_argument("coverage: empty set");
  std::vector<std::size_t> nearest(generated.size());
  parallel_for(generated.size(), [&](std::size_t g) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t t = 0; t < test.size(); ++t) {
      double d = chamfer(generated[g], test[t]);
      if (d < best) { best = d; arg = t; }
    }
    nearest[g] = arg;
  });
  std::vector<char> covered(test.size(), 0);
  for (std::size_t arg : nearest) covered[arg] = 1;
  std::size_t count = 0;
  for (char c : covered) count += c;
  return double(count) / double(test.size());
}

double jsd(const std::vector<PointCloud> &generated, const std::vector<PointCloud> &test,
           std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("jsd: resolution < 2");
  std::vector<double> p = voxel_histogram(generated, resolution);
  std::vector<double> q = voxel_histogram(test, resolution);
  double div = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) div += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) div += 0.5 * q[i] * std::log(q[i] / m);
  }
  return div;
}

MetricReport metric_report(const std::vector<PointCloud> &generated,
                           const std::vector<PointCloud> &test, std::size_t resolution) {
  MetricReport r;
  r.mmd = mmd(generated, test);
  r.coverage = coverage(generated, test);
  r.jsd = jsd(generated, test, resolution);
  r.generated_count = generated.size();
  r.test_count = test.size();
  r.voxel_resolution = resolution;
  return r;
}

DegreeHistogram degree_histogram(const std::vector<NurbsSurface> &corpus) {
  if (corpus.empty()) throw std::invalid_argument("degree-histogram: empty corpus");
  DegreeHistogram h;
  for (const NurbsSurface &s : corpus) {
    h.by_degree_u[order_bucket(s.degree_u)] += 1.0;
    h.by_degree_v[order_bucket(s.degree_v)] += 1.0;
    h.by_order_u[order_bucket(s.degree_u + 1)] += 1.0;
    h.by_order_v[order_bucket(s.degree_v + 1)] += 1.0;
  }
  const double scale = 100.0 / double(corpus.size());
  for (auto *arr : {&h.by_degree_u, &h.by_degree_v, &h.by_order_u, &h.by_order_v})
    for (double &x : *arr) x *= scale;
  return h;
}

BenchResult bench_construction(const std::vector<NurbsSurface> &surfaces,
                               const std::vector<UvGrid> &grids, std::size_t repetitions) {
  if (surfaces.empty() || grids.empty())
    throw std::invalid_argument("bench: empty corpus");
  using clock = std::chrono::steady_clock;

  // NURBS path starts from stored normalized parameters
  std::vector<std::pair<NurbsSurface, NormalizationRecord>> stored;
  stored.reserve(surfaces.size());
  for (const NurbsSurface &s : surfaces) stored.push_back(normalize(s));

  auto time_nurbs = [&] {
    auto t0 = clock::now();
    for (const auto &[norm, rec] : stored) {
      NurbsSurface s = denormalize(norm, rec);
      s.validate();
    }
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  auto time_grids = [&] {
    auto t0 = clock::now();
    for (const UvGrid &g : grids) default_fit(g);
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  time_nurbs();  // warmup
  time_grids();
  std::vector<double> tn, tg;
  for (std::size_t r = 0; r < std::max<std::size_t>(repetitions, 5); ++r) {
    tn.push_back(time_nurbs());
    tg.push_back(time_grids());
  }
  std::sort(tn.begin(), tn.end());
  std::sort(tg.begin(), tg.end());
  double med_n = tn[tn.size() / 2], med_g = tg[tg.size() / 2];
  BenchResult out;
  out.nurbs_rate = double(surfaces.size()) / std::max(med_n, 1e-12);
  out.uvgrid_rate = double(grids.size()) / std::max(med_g, 1e-12);
  return out;
}

}  // namespace nnrb
