#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "neuronurbs/metrics.hpp"
#include "neuronurbs/preprocess.hpp"
#include "neuronurbs/types.hpp"
#include "neuronurbs/vae.hpp"

namespace nnrb::io {

// Canonical container: magic "NNRB", u16 version, u8 kind, u64 count,
// two u64 config words, then records. All numerics little-endian,
// reals IEEE-754 binary64.
enum class FileKind : std::uint8_t {
  kNurbs = 0,
  kUvGrid = 1,
  kBundle = 2,
  kFeature = 3,
  kCheckpoint = 4,
};

void write_nurbs_corpus(const std::string &path, const std::vector<NurbsSurface> &corpus);
std::vector<NurbsSurface> read_nurbs_corpus(const std::string &path);

void write_uvgrid_corpus(const std::string &path, const std::vector<UvGrid> &corpus);
std::vector<UvGrid> read_uvgrid_corpus(const std::string &path);

void write_bundle_corpus(const std::string &path, const std::vector<PaddedBundle> &corpus);
std::vector<PaddedBundle> read_bundle_corpus(const std::string &path);

void write_feature_corpus(const std::string &path, const std::vector<NurbsFeature> &corpus);
std::vector<NurbsFeature> read_feature_corpus(const std::string &path);

void write_checkpoint(const std::string &path, const VaeModel &model);
VaeModel read_checkpoint(const std::string &path);

// Exact on-disk byte counts of one canonical record (record header
// included, file header not).
std::size_t serialized_size(const NurbsSurface &surface);
std::size_t serialized_size(const UvGrid &grid);

std::string metric_report_text(const MetricReport &report);
void write_metric_report(const std::string &path, const MetricReport &report);  // JSON
MetricReport read_metric_report(const std::string &path);

std::string export_obj(const NurbsSurface &surface, std::size_t n, std::size_t m);

struct StepExtraction {
  std::vector<NurbsSurface> surfaces;
  std::map<std::string, std::size_t> skipped;  // entity type -> count
};

// Minimal ISO 10303-21 reader for untrimmed B-spline surface
// geometry: B_SPLINE_SURFACE_WITH_KNOTS plus the complex-entity
// rational form. Everything else is counted and skipped.
StepExtraction extract_step_surfaces(const std::string &text);

}  // namespace nnrb::io
