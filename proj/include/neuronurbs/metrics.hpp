#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "neuronurbs/types.hpp"

namespace nnrb {

struct MetricReport {
  double mmd = 0.0;
  double coverage = 0.0;
  double jsd = 0.0;
  std::size_t generated_count = 0, test_count = 0;
  std::size_t voxel_resolution = 28;
};

// Order buckets used by the degree tables: {2, 3, 4, >=5}. Reported
// in both conventions since the source table's heading is ambiguous.
struct DegreeHistogram {
  std::array<double, 4> by_degree_u{}, by_degree_v{};  // percentages, bucket of degree
  std::array<double, 4> by_order_u{}, by_order_v{};    // percentages, bucket of degree+1
};

// Symmetric sum of mean squared nearest-neighbor distances.
double chamfer(const PointCloud &a, const PointCloud &b);

// Mean over test clouds of the Chamfer distance to the closest
// generated cloud.
double mmd(const std::vector<PointCloud> &generated, const std::vector<PointCloud> &test);

// Fraction of test clouds matched by at least one generated cloud.
double coverage(const std::vector<PointCloud> &generated, const std::vector<PointCloud> &test);

// Jensen-Shannon divergence (natural log) between pooled voxel
// occupancy histograms; clouds must lie in the unit cube.
double jsd(const std::vector<PointCloud> &generated, const std::vector<PointCloud> &test,
           std::size_t resolution = 28);

MetricReport metric_report(const std::vector<PointCloud> &generated,
                           const std::vector<PointCloud> &test,
                           std::size_t resolution = 28);

DegreeHistogram degree_histogram(const std::vector<NurbsSurface> &corpus);

struct BenchResult {
  double nurbs_rate = 0.0;   // surfaces/second, denormalize + construct
  double uvgrid_rate = 0.0;  // surfaces/second, default_fit
};

BenchResult bench_construction(const std::vector<NurbsSurface> &surfaces,
                               const std::vector<UvGrid> &grids,
                               std::size_t repetitions = 5);

// Worker cap for the batch metrics: min(hardware, NNRB_THREADS).
std::size_t metric_thread_count();

}  // namespace nnrb
