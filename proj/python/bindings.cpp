#include "d2im/app.hpp"
#include "d2im/extraction.hpp"
#include "d2im/fixtures.hpp"
#include "d2im/io.hpp"
#include "d2im/transfer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace d2im;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const F64Array& a) {
  require(a.ndim() == 2 && a.shape(1) == 3, "expected an array of shape (n, 3)");
  std::vector<Vec3> pts(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts[i] = {r(i, 0), r(i, 1), r(i, 2)};
  return pts;
}

F64Array from_points(const std::vector<Vec3>& pts) {
  F64Array a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < 3; ++k) w(i, k) = pts[i][k];
  return a;
}

TriMesh make_mesh(const F64Array& vertices, const I32Array& triangles) {
  require(triangles.ndim() == 2 && triangles.shape(1) == 3, "triangles must have shape (m, 3)");
  TriMesh m;
  m.vertices = to_points(vertices);
  auto t = triangles.unchecked<2>();
  for (py::ssize_t i = 0; i < triangles.shape(0); ++i) m.triangles.push_back({t(i, 0), t(i, 1), t(i, 2)});
  m.validate();
  m.compute_normals();
  return m;
}

I32Array mesh_triangles(const TriMesh& m) {
  I32Array a({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.triangles.size(); ++i)
    for (int k = 0; k < 3; ++k) w(i, k) = m.triangles[i][k];
  return a;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["cd"] = r.cd;
  d["iou"] = r.iou;
  d["ecd3d"] = r.ecd3d.value ? py::cast(*r.ecd3d.value) : py::none();
  d["ecd2d"] = r.ecd2d.value ? py::cast(*r.ecd2d.value) : py::none();
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Disentangled implicit shape fields: base grid plus front/back displacement maps";

  // Translators registered later are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  py::class_<TriMesh>(m, "TriMesh")
      .def(py::init(&make_mesh), py::arg("vertices"), py::arg("triangles"))
      .def_property_readonly("vertices", [](const TriMesh& t) { return from_points(t.vertices); })
      .def_property_readonly("triangles", &mesh_triangles)
      .def_property_readonly("empty", &TriMesh::empty)
      .def("area", &TriMesh::area)
      .def("is_watertight", [](const TriMesh& t) { return is_edge_manifold_closed(t); })
      .def("to_obj", [](const TriMesh& t) { return format_obj(t); })
      .def("save", [](const TriMesh& t, const std::string& path) { save_obj(t, path); })
      .def_static("load", [](const std::string& path) { return load_obj(path); })
      .def_static("from_obj", &parse_obj);

  py::class_<Camera>(m, "Camera")
      .def_static("front", &Camera::front, py::arg("resolution") = 224)
      .def_static("rotated_y", &Camera::rotated_y, py::arg("radians"), py::arg("resolution") = 224)
      .def_readwrite("pixel_scale", &Camera::pixel_scale)
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height)
      .def("project", [](const Camera& c, const F64Array& pts) {
        const auto p = to_points(pts);
        F64Array a({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
        auto w = a.mutable_unchecked<2>();
        for (std::size_t i = 0; i < p.size(); ++i) {
          const Vec2 u = c.project(p[i]);
          w(i, 0) = u.x();
          w(i, 1) = u.y();
        }
        return a;
      });

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &FitConfig::iterations)
      .def_readwrite("batch_size", &FitConfig::batch_size)
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_readwrite("lambda_lap", &FitConfig::lambda_lap)
      .def_readwrite("delta", &FitConfig::delta)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("sample_count", &FitConfig::sample_count)
      .def_readwrite("base_resolution", &FitConfig::base_resolution)
      .def_readwrite("map_resolution", &FitConfig::map_resolution)
      .def_property(
          "ablation", [](const FitConfig& c) { return to_string(c.ablation); },
          [](FitConfig& c, const std::string& s) { c.ablation = ablation_from_string(s); });

  py::class_<DisentangledField>(m, "Field")
      .def_property_readonly("base_resolution", [](const DisentangledField& f) { return f.base.resolution(); })
      .def_property_readonly("map_shape", [](const DisentangledField& f) {
        return py::make_tuple(f.front.height(), f.front.width());
      })
      .def("evaluate", [](const DisentangledField& f, const F64Array& pts) {
        const auto p = to_points(pts);
        py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(p.size())});
        auto w = out.mutable_unchecked<1>();
        for (std::size_t i = 0; i < p.size(); ++i) w(i) = evaluate_fused(f, p[i]);
        return out;
      }, py::arg("points"))
      .def("save", [](const DisentangledField& f, const std::string& path) { save_field(f, path); })
      .def_static("load", [](const std::string& path) { return load_field(path); })
      .def("__eq__", [](const DisentangledField& a, const DisentangledField& b) { return a == b; });

  m.def("fixture_names", [] {
    std::vector<std::string> names;
    for (const auto& entry : fixtures::canonical_set()) names.push_back(entry.first);
    return names;
  });
  m.def("fixture", &fixtures::by_name, py::arg("name"));

  m.def("fit", [](const TriMesh& mesh, const Camera& camera, const FitConfig& cfg) {
    FitTrace trace;
    {
      py::gil_scoped_release release;
      trace = fit(mesh, camera, cfg);
    }
    py::array_t<double> history({static_cast<py::ssize_t>(trace.history.size()), py::ssize_t{4}});
    auto w = history.mutable_unchecked<2>();
    for (std::size_t i = 0; i < trace.history.size(); ++i) {
      const auto& r = trace.history[i];
      w(i, 0) = r.l_base;
      w(i, 1) = r.l_sdf;
      w(i, 2) = r.l_lap;
      w(i, 3) = r.total;
    }
    return py::make_tuple(trace.field, history);
  }, py::arg("mesh"), py::arg("camera"), py::arg("config"),
     "Returns (field, history) with history columns l_base, l_sdf, l_lap, total.");

  m.def("extract", [](const DisentangledField& f, int n) {
    py::gil_scoped_release release;
    return marching_cubes(sample_fused(f, n));
  }, py::arg("field"), py::arg("resolution") = 128);

  m.def("marching_cubes", [](const F64Array& values) {
    require(values.ndim() == 3 && values.shape(0) == values.shape(1) && values.shape(1) == values.shape(2),
            "values must be a cubic (n, n, n) array indexed [z, y, x]");
    FieldGrid g;
    g.n = static_cast<int>(values.shape(0));
    g.values.assign(values.data(), values.data() + values.size());
    return marching_cubes(g);
  }, py::arg("values"));

  m.def("signed_distance", [](const TriMesh& mesh, const F64Array& pts) {
    const MeshSdf sdf(mesh);
    const auto p = to_points(pts);
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(p.size())});
    auto w = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < p.size(); ++i) w(i) = sdf(p[i]);
    return out;
  }, py::arg("mesh"), py::arg("points"));

  m.def("chamfer", [](const F64Array& a, const F64Array& b) {
    return chamfer_l1(to_points(a), to_points(b));
  }, py::arg("a"), py::arg("b"));

  m.def("evaluate", [](const TriMesh& gt, const TriMesh& rec, const Camera& camera, std::uint64_t seed,
                       std::size_t point_count) {
    MetricParams params;
    params.seed = seed;
    params.point_count = point_count;
    MetricReport r;
    {
      py::gil_scoped_release release;
      r = evaluate_meshes(gt, rec, camera, params);
    }
    return report_dict(r);
  }, py::arg("gt"), py::arg("rec"), py::arg("camera"), py::arg("seed") = 0,
     py::arg("point_count") = 20000);

  m.def("transfer", [](const DisentangledField& target, const DisentangledField& source,
                       const std::string& boxes_json, int n) {
    const PartBoxes boxes = PartBoxes::from_json(boxes_json);
    py::gil_scoped_release release;
    return marching_cubes(sample_field(
        [&](const Vec3& p) { return evaluate_transferred(target, source, boxes, p, 1e-3); }, n));
  }, py::arg("target"), py::arg("source"), py::arg("boxes_json"), py::arg("resolution") = 128);

  m.def("default_config", [] { return app::RunConfig{}.to_json(); });
  m.def("normalize_config", [](const std::string& text) { return app::RunConfig::from_json(text).to_json(); },
        py::arg("config_json"));

  m.def("run", [](const std::string& verb, const std::string& config_json) {
    const app::RunConfig config = app::RunConfig::from_json(config_json);
    std::ostringstream log, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = app::run(verb, config, log, err);
    }
    return py::make_tuple(code, log.str(), err.str());
  }, py::arg("verb"), py::arg("config_json"),
     "Runs a CLI verb in-process; returns (exit_code, log, errors).");
}
