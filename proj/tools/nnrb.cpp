#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "neuronurbs/core.hpp"
#include "neuronurbs/datagen.hpp"
#include "neuronurbs/fitting.hpp"
#include "neuronurbs/io.hpp"
#include "neuronurbs/metrics.hpp"
#include "neuronurbs/preprocess.hpp"
#include "neuronurbs/vae.hpp"

namespace {

using nlohmann::json;

// Explicitly passed config file overrides flag values.
json load_config(const std::string &path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cli: cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

template <typename T>
void override_from(const json &cfg, const char *key, T &value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

// Clouds for the distribution metrics, mapped jointly into the unit
// cube so the voxel histograms are comparable.
void normalize_clouds(std::vector<nnrb::PointCloud> &a, std::vector<nnrb::PointCloud> &b) {
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  auto scan = [&](const std::vector<nnrb::PointCloud> &set) {
    for (const auto &c : set)
      for (const auto &p : c.points) {
        double v[3] = {p.x, p.y, p.z};
        for (int d = 0; d < 3; ++d) {
          lo[d] = std::min(lo[d], v[d]);
          hi[d] = std::max(hi[d], v[d]);
        }
      }
  };
  scan(a);
  scan(b);
  double range = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-12});
  auto apply = [&](std::vector<nnrb::PointCloud> &set) {
    for (auto &c : set)
      for (auto &p : c.points) {
        p.x = (p.x - lo[0]) / range;
        p.y = (p.y - lo[1]) / range;
        p.z = (p.z - lo[2]) / range;
      }
  };
  apply(a);
  apply(b);
}

std::vector<nnrb::PointCloud> clouds_of(const std::vector<nnrb::NurbsSurface> &corpus,
                                        std::size_t points, std::uint64_t seed) {
  std::vector<nnrb::PointCloud> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    out.push_back(nnrb::sample_point_cloud(corpus[i], points, seed + i));
  return out;
}

void print_degree_table(const nnrb::DegreeHistogram &h) {
  auto row = [](const char *label, const std::array<double, 4> &a) {
    std::printf("%-22s %7.2f%% %7.2f%% %7.2f%% %7.2f%%\n", label, a[0], a[1], a[2], a[3]);
  };
  std::printf("%-22s %8s %8s %8s %8s\n", "bucket", "2", "3", "4", ">=5");
  row("U by degree", h.by_degree_u);
  row("V by degree", h.by_degree_v);
  row("U by order (deg+1)", h.by_order_u);
  row("V by order (deg+1)", h.by_order_v);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"NURBS surface representation toolkit"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, ckpt_path, second_path;
  std::uint64_t seed = 0;

  // gen-corpus
  auto *gen = app.add_subcommand("gen-corpus", "generate a synthetic NURBS corpus");
  nnrb::CorpusSpec cspec;
  bool dedup = false;
  gen->add_option("--planes", cspec.planes);
  gen->add_option("--ruled", cspec.ruled);
  gen->add_option("--smooth", cspec.random_smooth);
  gen->add_option("--arcs", cspec.rational_arcs);
  gen->add_option("--max-ctrl", cspec.max_ctrl);
  gen->add_option("--extent", cspec.extent);
  gen->add_option("--seed", cspec.seed);
  gen->add_flag("--dedup", dedup);
  gen->add_option("--out", out_path)->required();
  gen->add_option("--config", config_path);

  // sample-grid
  auto *sgrid = app.add_subcommand("sample-grid", "sample UV-grids from a NURBS corpus");
  std::size_t grid_n = 32, grid_m = 32;
  sgrid->add_option("--in", in_path)->required();
  sgrid->add_option("--n", grid_n);
  sgrid->add_option("--m", grid_m);
  sgrid->add_option("--out", out_path)->required();

  // preprocess
  auto *prep = app.add_subcommand("preprocess", "normalize + pack a NURBS corpus");
  nnrb::PreprocessConfig pconf;
  prep->add_option("--in", in_path)->required();
  prep->add_option("--pad-dim", pconf.pad_dim);
  prep->add_option("--knot-len", pconf.knot_len);
  prep->add_option("--out", out_path)->required();
  prep->add_option("--config", config_path);

  // train
  auto *train = app.add_subcommand("train", "train the parameter autoencoder");
  nnrb::VaeConfig vconf;
  nnrb::TrainSettings tset;
  train->add_option("--in", in_path)->required();
  train->add_option("--embed-dim", vconf.embed_dim);
  train->add_option("--layers", vconf.num_layers);
  train->add_option("--heads", vconf.num_heads);
  train->add_option("--latent-dim", vconf.latent_dim);
  train->add_option("--beta", vconf.kl_weight);
  train->add_option("--seed", seed);
  train->add_option("--epochs", tset.epochs);
  train->add_option("--batch", tset.batch_size);
  train->add_option("--lr", tset.learning_rate);
  train->add_option("--momentum", tset.momentum);
  train->add_option("--out", out_path)->required();
  train->add_option("--config", config_path);

  // encode / decode / reconstruct
  auto *enc = app.add_subcommand("encode", "encode bundles to latent features");
  enc->add_option("--in", in_path)->required();
  enc->add_option("--ckpt", ckpt_path)->required();
  enc->add_option("--out", out_path)->required();

  auto *dec = app.add_subcommand("decode", "decode latent features to surfaces");
  dec->add_option("--in", in_path)->required();
  dec->add_option("--ckpt", ckpt_path)->required();
  dec->add_option("--out", out_path)->required();

  auto *rec = app.add_subcommand("reconstruct", "round-trip a NURBS corpus through the model");
  rec->add_option("--in", in_path)->required();
  rec->add_option("--ckpt", ckpt_path)->required();
  rec->add_option("--out", out_path)->required();

  // fit
  auto *fit = app.add_subcommand("fit", "fit B-spline surfaces to UV-grids");
  nnrb::FitSpec fspec;
  bool fit_custom = false;
  fit->add_option("--in", in_path)->required();
  fit->add_option("--degree-u", fspec.degree_u)->each([&](const std::string &) { fit_custom = true; });
  fit->add_option("--degree-v", fspec.degree_v)->each([&](const std::string &) { fit_custom = true; });
  fit->add_option("--ctrl-u", fspec.num_ctrl_u)->each([&](const std::string &) { fit_custom = true; });
  fit->add_option("--ctrl-v", fspec.num_ctrl_v)->each([&](const std::string &) { fit_custom = true; });
  fit->add_option("--out", out_path)->required();

  // metrics
  auto *met = app.add_subcommand("metrics", "point-cloud distribution metrics");
  std::size_t met_points = 2000, met_res = 28;
  met->add_option("--generated", in_path)->required();
  met->add_option("--test", second_path)->required();
  met->add_option("--points", met_points);
  met->add_option("--resolution", met_res);
  met->add_option("--seed", seed);
  met->add_option("--out", out_path);

  // degree-stats
  auto *deg = app.add_subcommand("degree-stats", "degree distribution table");
  deg->add_option("--in", in_path)->required();

  // bench
  auto *bench = app.add_subcommand("bench", "construction-speed comparison");
  std::size_t reps = 5;
  bench->add_option("--nurbs", in_path)->required();
  bench->add_option("--grids", second_path)->required();
  bench->add_option("--reps", reps);

  // extract-step
  auto *step = app.add_subcommand("extract-step", "extract B-spline surfaces from a STEP file");
  step->add_option("--in", in_path)->required();
  step->add_option("--out", out_path)->required();

  // export-obj
  auto *obj = app.add_subcommand("export-obj", "tessellate one surface to OBJ");
  std::size_t obj_index = 0, obj_n = 32, obj_m = 32;
  obj->add_option("--in", in_path)->required();
  obj->add_option("--index", obj_index);
  obj->add_option("--n", obj_n);
  obj->add_option("--m", obj_m);
  obj->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      json cfg = load_config(config_path);
      override_from(cfg, "planes", cspec.planes);
      override_from(cfg, "ruled", cspec.ruled);
      override_from(cfg, "smooth", cspec.random_smooth);
      override_from(cfg, "arcs", cspec.rational_arcs);
      override_from(cfg, "max_ctrl", cspec.max_ctrl);
      override_from(cfg, "extent", cspec.extent);
      override_from(cfg, "seed", cspec.seed);
      auto corpus = nnrb::generate(cspec);
      if (dedup) corpus = nnrb::deduplicate(corpus);
      nnrb::io::write_nurbs_corpus(out_path, corpus);
      std::printf("wrote %zu surfaces to %s\n", corpus.size(), out_path.c_str());
    } else if (sgrid->parsed()) {
      auto corpus = nnrb::io::read_nurbs_corpus(in_path);
      std::vector<nnrb::UvGrid> grids;
      grids.reserve(corpus.size());
      for (const auto &s : corpus) grids.push_back(nnrb::sample_uv_grid(s, grid_n, grid_m));
      nnrb::io::write_uvgrid_corpus(out_path, grids);
      std::printf("wrote %zu grids (%zux%zu) to %s\n", grids.size(), grid_n, grid_m,
                  out_path.c_str());
    } else if (prep->parsed()) {
      json cfg = load_config(config_path);
      override_from(cfg, "pad_dim", pconf.pad_dim);
      override_from(cfg, "knot_len", pconf.knot_len);
      auto corpus = nnrb::io::read_nurbs_corpus(in_path);
      std::vector<nnrb::PaddedBundle> bundles;
      std::size_t filtered = 0;
      for (const auto &s : corpus) {
        if (s.num_ctrl_u() > pconf.pad_dim || s.num_ctrl_v() > pconf.pad_dim ||
            s.knots_u.size() > pconf.knot_len || s.knots_v.size() > pconf.knot_len) {
          ++filtered;
          continue;
        }
        auto [norm, record] = nnrb::normalize(s);
        bundles.push_back(nnrb::pack(norm, pconf));
      }
      nnrb::io::write_bundle_corpus(out_path, bundles);
      std::printf("wrote %zu bundles to %s (%zu filtered by size)\n", bundles.size(),
                  out_path.c_str(), filtered);
    } else if (train->parsed()) {
      json cfg = load_config(config_path);
      override_from(cfg, "embed_dim", vconf.embed_dim);
      override_from(cfg, "layers", vconf.num_layers);
      override_from(cfg, "heads", vconf.num_heads);
      override_from(cfg, "latent_dim", vconf.latent_dim);
      override_from(cfg, "beta", vconf.kl_weight);
      override_from(cfg, "seed", seed);
      override_from(cfg, "epochs", tset.epochs);
      override_from(cfg, "batch", tset.batch_size);
      override_from(cfg, "lr", tset.learning_rate);
      override_from(cfg, "momentum", tset.momentum);
      auto bundles = nnrb::io::read_bundle_corpus(in_path);
      if (bundles.empty()) throw std::runtime_error("cli: empty bundle corpus");
      vconf.pad_dim = bundles.front().pad_dim;
      vconf.knot_len = bundles.front().knot_len;
      vconf.seed = seed;
      for (auto &b : bundles) b = nnrb::to_model_range(b);
      nnrb::VaeModel model(vconf);
      auto history = model.train(bundles, tset);
      nnrb::io::write_checkpoint(out_path, model);
      std::printf("trained %zu epochs on %zu bundles (%zu params)\n", history.size(),
                  bundles.size(), model.param_count());
      std::printf("epoch 1 loss %.6f, final loss %.6f\n", history.front().total,
                  history.back().total);
    } else if (enc->parsed()) {
      auto model = nnrb::io::read_checkpoint(ckpt_path);
      auto bundles = nnrb::io::read_bundle_corpus(in_path);
      std::vector<nnrb::NurbsFeature> features;
      features.reserve(bundles.size());
      for (const auto &b : bundles) features.push_back(model.encode(nnrb::to_model_range(b)));
      nnrb::io::write_feature_corpus(out_path, features);
      std::printf("encoded %zu features to %s\n", features.size(), out_path.c_str());
    } else if (dec->parsed()) {
      auto model = nnrb::io::read_checkpoint(ckpt_path);
      auto features = nnrb::io::read_feature_corpus(in_path);
      // without a source bundle, decode against the full-size layout
      nnrb::PaddedBundle like;
      const auto &c = model.config();
      like.pad_dim = c.pad_dim;
      like.knot_len = c.knot_len;
      like.p_w.assign(c.pad_dim * c.pad_dim * 4, 0.0);
      like.knots_u.assign(c.knot_len, 0.0);
      like.knots_v.assign(c.knot_len, 0.0);
      like.mask.assign(c.pad_dim * c.pad_dim, true);
      like.true_n = like.true_m = c.pad_dim;
      like.true_knot_len_u = like.true_knot_len_v = c.knot_len;
      std::vector<nnrb::NurbsSurface> surfaces;
      std::size_t rejected = 0;
      for (const auto &f : features) {
        try {
          nnrb::PaddedBundle b =
              nnrb::post_generation_repair(nnrb::from_model_range(model.decode(f, like)));
          surfaces.push_back(nnrb::unpack(b));
        } catch (const std::exception &) {
          ++rejected;
        }
      }
      nnrb::io::write_nurbs_corpus(out_path, surfaces);
      std::printf("decoded %zu surfaces to %s (%zu rejected as degenerate)\n",
                  surfaces.size(), out_path.c_str(), rejected);
    } else if (rec->parsed()) {
      auto model = nnrb::io::read_checkpoint(ckpt_path);
      auto corpus = nnrb::io::read_nurbs_corpus(in_path);
      std::vector<nnrb::NurbsSurface> out;
      std::size_t rejected = 0;
      for (const auto &s : corpus) {
        try {
          out.push_back(model.reconstruct_surface(s));
        } catch (const std::exception &) {
          ++rejected;
        }
      }
      nnrb::io::write_nurbs_corpus(out_path, out);
      std::printf("reconstructed %zu surfaces to %s (%zu rejected)\n", out.size(),
                  out_path.c_str(), rejected);
    } else if (fit->parsed()) {
      auto grids = nnrb::io::read_uvgrid_corpus(in_path);
      std::vector<nnrb::NurbsSurface> out;
      out.reserve(grids.size());
      double rms_sum = 0.0;
      for (const auto &g : grids) {
        if (fit_custom) {
          auto [s, rms] = nnrb::fit_surface(g, fspec);
          out.push_back(s);
          rms_sum += rms;
        } else {
          out.push_back(nnrb::default_fit(g));
        }
      }
      nnrb::io::write_nurbs_corpus(out_path, out);
      std::printf("fitted %zu surfaces to %s", out.size(), out_path.c_str());
      if (fit_custom) std::printf(" (mean rms %.3g)", rms_sum / double(out.size()));
      std::printf("\n");
    } else if (met->parsed()) {
      auto generated = nnrb::io::read_nurbs_corpus(in_path);
      auto test = nnrb::io::read_nurbs_corpus(second_path);
      auto gen_clouds = clouds_of(generated, met_points, seed);
      auto test_clouds = clouds_of(test, met_points, seed + 1000003);
      normalize_clouds(gen_clouds, test_clouds);
      nnrb::MetricReport report = nnrb::metric_report(gen_clouds, test_clouds, met_res);
      std::fputs(nnrb::io::metric_report_text(report).c_str(), stdout);
      if (!out_path.empty()) nnrb::io::write_metric_report(out_path, report);
    } else if (deg->parsed()) {
      auto corpus = nnrb::io::read_nurbs_corpus(in_path);
      print_degree_table(nnrb::degree_histogram(corpus));
    } else if (bench->parsed()) {
      auto surfaces = nnrb::io::read_nurbs_corpus(in_path);
      auto grids = nnrb::io::read_uvgrid_corpus(second_path);
      nnrb::BenchResult r = nnrb::bench_construction(surfaces, grids, reps);
      std::printf("nurbs_rate %.1f surfaces/s\n", r.nurbs_rate);
      std::printf("uvgrid_rate %.1f surfaces/s\n", r.uvgrid_rate);
      std::printf("ratio %.2f\n", r.nurbs_rate / r.uvgrid_rate);
    } else if (step->parsed()) {
      std::ifstream in(in_path);
      if (!in) throw std::runtime_error("cli: cannot open STEP file: " + in_path);
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      nnrb::io::StepExtraction ex = nnrb::io::extract_step_surfaces(text);
      nnrb::io::write_nurbs_corpus(out_path, ex.surfaces);
      std::printf("extracted %zu surfaces to %s\n", ex.surfaces.size(), out_path.c_str());
      for (const auto &[name, count] : ex.skipped)
        std::printf("skipped %zu x %s\n", count, name.c_str());
    } else if (obj->parsed()) {
      auto corpus = nnrb::io::read_nurbs_corpus(in_path);
      if (obj_index >= corpus.size())
        throw std::runtime_error("cli: surface index out of range");
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cli: cannot open for writing: " + out_path);
      out << nnrb::io::export_obj(corpus[obj_index], obj_n, obj_m);
      std::printf("wrote %zux%zu mesh to %s\n", obj_n, obj_m, out_path.c_str());
    }
  } catch (const std::exception &e) {
    std::cerr << "NNRB_ERROR " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
