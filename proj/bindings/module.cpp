#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neuronurbs/core.hpp"
#include "neuronurbs/datagen.hpp"
#include "neuronurbs/fitting.hpp"
#include "neuronurbs/io.hpp"
#include "neuronurbs/metrics.hpp"
#include "neuronurbs/preprocess.hpp"
#include "neuronurbs/vae.hpp"

namespace py = pybind11;
using namespace nnrb;

namespace {

Grid<Vec3> grid_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3)
    throw std::invalid_argument("expected an (n, m, 3) array");
  Grid<Vec3> g(arr.shape(0), arr.shape(1));
  auto r = arr.unchecked<3>();
  for (py::ssize_t i = 0; i < arr.shape(0); ++i)
    for (py::ssize_t j = 0; j < arr.shape(1); ++j)
      g.at(i, j) = {r(i, j, 0), r(i, j, 1), r(i, j, 2)};
  return g;
}

py::array_t<double> array_from_grid(const Grid<Vec3> &g) {
  py::array_t<double> arr({g.rows, g.cols, std::size_t(3)});
  auto w = arr.mutable_unchecked<3>();
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j) {
      w(i, j, 0) = g.at(i, j).x;
      w(i, j, 1) = g.at(i, j).y;
      w(i, j, 2) = g.at(i, j).z;
    }
  return arr;
}

PointCloud cloud_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 2 || arr.shape(1) != 3)
    throw std::invalid_argument("expected an (n, 3) array");
  PointCloud c;
  auto r = arr.unchecked<2>();
  for (py::ssize_t i = 0; i < arr.shape(0); ++i)
    c.points.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return c;
}

py::array_t<double> array_from_cloud(const PointCloud &c) {
  py::array_t<double> arr({c.points.size(), std::size_t(3)});
  auto w = arr.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    w(i, 0) = c.points[i].x;
    w(i, 1) = c.points[i].y;
    w(i, 2) = c.points[i].z;
  }
  return arr;
}

std::vector<PointCloud> clouds_from_list(const py::list &lst) {
  std::vector<PointCloud> out;
  for (auto item : lst) out.push_back(cloud_from_array(py::cast<py::array_t<double>>(item)));
  return out;
}

NurbsSurface make_surface(int degree_u, int degree_v, std::vector<double> knots_u,
                          std::vector<double> knots_v, py::array_t<double> control_points,
                          py::object weights) {
  NurbsSurface s;
  s.degree_u = degree_u;
  s.degree_v = degree_v;
  s.knots_u = KnotVector(std::move(knots_u));
  s.knots_v = KnotVector(std::move(knots_v));
  s.control_points = grid_from_array(control_points);
  if (weights.is_none()) {
    s.weights = Grid<double>(s.control_points.rows, s.control_points.cols, 1.0);
  } else {
    auto wa = py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(weights);
    if (wa.ndim() != 2) throw std::invalid_argument("weights must be 2-D");
    s.weights = Grid<double>(wa.shape(0), wa.shape(1));
    auto r = wa.unchecked<2>();
    for (py::ssize_t i = 0; i < wa.shape(0); ++i)
      for (py::ssize_t j = 0; j < wa.shape(1); ++j) s.weights.at(i, j) = r(i, j);
  }
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_neuronurbs, m) {
  m.doc() = "NURBS surface representation toolkit";

  py::class_<NurbsSurface>(m, "NurbsSurface")
      .def(py::init(&make_surface), py::arg("degree_u"), py::arg("degree_v"),
           py::arg("knots_u"), py::arg("knots_v"), py::arg("control_points"),
           py::arg("weights") = py::none())
      .def_readonly("degree_u", &NurbsSurface::degree_u)
      .def_readonly("degree_v", &NurbsSurface::degree_v)
      .def_property_readonly("knots_u",
                             [](const NurbsSurface &s) { return s.knots_u.values(); })
      .def_property_readonly("knots_v",
                             [](const NurbsSurface &s) { return s.knots_v.values(); })
      .def_property_readonly(
          "control_points",
          [](const NurbsSurface &s) { return array_from_grid(s.control_points); })
      .def_property_readonly("weights", [](const NurbsSurface &s) {
        py::array_t<double> arr({s.weights.rows, s.weights.cols});
        auto w = arr.mutable_unchecked<2>();
        for (std::size_t i = 0; i < s.weights.rows; ++i)
          for (std::size_t j = 0; j < s.weights.cols; ++j) w(i, j) = s.weights.at(i, j);
        return arr;
      })
      .def("eval", [](const NurbsSurface &s, double u, double v) {
        Vec3 p = surface_eval(s, u, v);
        return py::make_tuple(p.x, p.y, p.z);
      })
      .def("sample_grid",
           [](const NurbsSurface &s, std::size_t n, std::size_t m) {
             return array_from_grid(sample_uv_grid(s, n, m).points);
           })
      .def("sample_points", [](const NurbsSurface &s, std::size_t count, std::uint64_t seed) {
        return array_from_cloud(sample_point_cloud(s, count, seed));
      });

  m.def("basis_functions", [](std::vector<double> knots, int degree, double u) {
    return basis_functions(KnotVector(std::move(knots)), degree, u);
  });
  m.def("infer_degrees", [](std::size_t lu, std::size_t lv, std::size_t n, std::size_t m) {
    return infer_degrees(lu, lv, n, m);
  });

  m.def("fit_surface", [](py::array_t<double> grid_points, int degree_u, int degree_v,
                          std::size_t num_ctrl_u, std::size_t num_ctrl_v) {
    UvGrid g;
    g.points = grid_from_array(grid_points);
    FitSpec spec{degree_u, degree_v, num_ctrl_u, num_ctrl_v};
    auto [s, rms] = fit_surface(g, spec);
    return py::make_tuple(s, rms);
  });
  m.def("default_fit", [](py::array_t<double> grid_points) {
    UvGrid g;
    g.points = grid_from_array(grid_points);
    return default_fit(g);
  });

  m.def("chamfer", [](py::array_t<double> a, py::array_t<double> b) {
    return chamfer(cloud_from_array(a), cloud_from_array(b));
  });
  m.def("mmd", [](py::list g, py::list t) { return mmd(clouds_from_list(g), clouds_from_list(t)); });
  m.def("coverage",
        [](py::list g, py::list t) { return coverage(clouds_from_list(g), clouds_from_list(t)); });
  m.def("jsd", [](py::list g, py::list t, std::size_t resolution) {
    return jsd(clouds_from_list(g), clouds_from_list(t), resolution);
  }, py::arg("generated"), py::arg("test"), py::arg("resolution") = 28);

  m.def("generate_corpus", [](std::size_t planes, std::size_t ruled, std::size_t smooth,
                              std::size_t arcs, std::uint64_t seed) {
    CorpusSpec spec;
    spec.planes = planes;
    spec.ruled = ruled;
    spec.random_smooth = smooth;
    spec.rational_arcs = arcs;
    spec.seed = seed;
    return generate(spec);
  }, py::arg("planes") = 0, py::arg("ruled") = 0, py::arg("smooth") = 0,
     py::arg("arcs") = 0, py::arg("seed") = 0);

  py::class_<DegreeHistogram>(m, "DegreeHistogram")
      .def_readonly("by_degree_u", &DegreeHistogram::by_degree_u)
      .def_readonly("by_degree_v", &DegreeHistogram::by_degree_v)
      .def_readonly("by_order_u", &DegreeHistogram::by_order_u)
      .def_readonly("by_order_v", &DegreeHistogram::by_order_v);
  m.def("degree_histogram", &degree_histogram);

  py::class_<VaeConfig>(m, "VaeConfig")
      .def(py::init<>())
      .def_readwrite("pad_dim", &VaeConfig::pad_dim)
      .def_readwrite("knot_len", &VaeConfig::knot_len)
      .def_readwrite("embed_dim", &VaeConfig::embed_dim)
      .def_readwrite("num_layers", &VaeConfig::num_layers)
      .def_readwrite("num_heads", &VaeConfig::num_heads)
      .def_readwrite("latent_dim", &VaeConfig::latent_dim)
      .def_readwrite("kl_weight", &VaeConfig::kl_weight)
      .def_readwrite("seed", &VaeConfig::seed);

  py::class_<TrainSettings>(m, "TrainSettings")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainSettings::epochs)
      .def_readwrite("batch_size", &TrainSettings::batch_size)
      .def_readwrite("learning_rate", &TrainSettings::learning_rate)
      .def_readwrite("momentum", &TrainSettings::momentum);

  py::class_<LossBreakdown>(m, "LossBreakdown")
      .def_readonly("recon_pw", &LossBreakdown::recon_pw)
      .def_readonly("recon_u", &LossBreakdown::recon_u)
      .def_readonly("recon_v", &LossBreakdown::recon_v)
      .def_readonly("kl", &LossBreakdown::kl)
      .def_readonly("total", &LossBreakdown::total);

  py::class_<NurbsFeature>(m, "NurbsFeature")
      .def_readonly("z", &NurbsFeature::z)
      .def_readonly("mu", &NurbsFeature::mu)
      .def_readonly("log_var", &NurbsFeature::log_var);

  py::class_<VaeModel>(m, "VaeModel")
      .def(py::init<const VaeConfig &>())
      .def_property_readonly("param_count", &VaeModel::param_count)
      .def("train",
           [](VaeModel &model, const std::vector<NurbsSurface> &corpus,
              const TrainSettings &settings) {
             PreprocessConfig pc{model.config().pad_dim, model.config().knot_len};
             std::vector<PaddedBundle> bundles;
             for (const auto &s : corpus)
               bundles.push_back(to_model_range(pack(normalize(s).first, pc)));
             return model.train(bundles, settings);
           })
      .def("encode_surface",
           [](const VaeModel &model, const NurbsSurface &s) {
             PreprocessConfig pc{model.config().pad_dim, model.config().knot_len};
             return model.encode(to_model_range(pack(normalize(s).first, pc)));
           })
      .def("reconstruct", &VaeModel::reconstruct_surface)
      .def("save", [](const VaeModel &m2, const std::string &path) {
        io::write_checkpoint(path, m2);
      })
      .def_static("load", &io::read_checkpoint);

  m.def("write_nurbs_corpus", &io::write_nurbs_corpus);
  m.def("read_nurbs_corpus", &io::read_nurbs_corpus);
  m.def("export_obj", &io::export_obj);
  m.def("extract_step_surfaces", [](const std::string &text) {
    io::StepExtraction ex = io::extract_step_surfaces(text);
    return py::make_tuple(ex.surfaces, ex.skipped);
  });
}
