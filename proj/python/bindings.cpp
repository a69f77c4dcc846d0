// SPDX-License-Identifier: Apache-2.0
// Python bindings. Events and vectors cross the boundary as sequences of floats.
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/lax_oleinik.hpp"
#include "lorentz_eikonal/run.hpp"
#include "lorentz_eikonal/verify.hpp"

namespace py = pybind11;
namespace le = lorentz_eikonal;

namespace {

le::Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const le::Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vec(const le::Vec& v) { return {v.data(), v.data() + v.size()}; }

le::Event to_event(const std::vector<double>& v) { return le::Event(to_vec(v)); }

le::Slab make_slab(double t_min, double t_max, std::vector<std::array<double, 2>> space) {
  return le::Slab{t_min, t_max, std::move(space)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variational solutions of the timelike eikonal equation";

  static py::exception<le::Error> error(m, "LorentzEikonalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const le::Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      inst.attr("code") = std::string(le::to_string(e.code()));
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<le::Spacetime>(m, "Spacetime")
      .def_static("minkowski",
                  [](int dim, double t0, double t1, std::vector<std::array<double, 2>> space) {
                    return le::Spacetime::minkowski(dim, make_slab(t0, t1, std::move(space)));
                  },
                  py::arg("dim"), py::arg("t_min"), py::arg("t_max"), py::arg("space"))
      .def_static("paper_minkowski_2d",
                  [](double t0, double t1, std::array<double, 2> space) {
                    return le::Spacetime::paper_minkowski_2d(make_slab(t0, t1, {space}));
                  },
                  py::arg("t_min"), py::arg("t_max"), py::arg("space"))
      .def_static("conformally_flat",
                  [](int dim, double t0, double t1, std::vector<std::array<double, 2>> space, const std::string& a) {
                    return le::Spacetime::conformally_flat(dim, make_slab(t0, t1, std::move(space)),
                                                           le::parse_expression(a));
                  },
                  py::arg("dim"), py::arg("t_min"), py::arg("t_max"), py::arg("space"), py::arg("factor"))
      .def_property_readonly("dim", &le::Spacetime::dim)
      .def_property_readonly("labels", &le::Spacetime::labels)
      .def("metric", [](const le::Spacetime& st, const std::vector<double>& p) {
        const le::Mat g = le::metric_at(st, to_event(p));
        std::vector<std::vector<double>> out(static_cast<std::size_t>(g.rows()));
        for (Eigen::Index i = 0; i < g.rows(); ++i)
          for (Eigen::Index j = 0; j < g.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(g(i, j));
        return out;
      });

  py::class_<le::InitialDatum>(m, "InitialDatum")
      .def_static("constant", &le::InitialDatum::constant)
      .def_static("linear", [](const std::vector<double>& a, double b) { return le::InitialDatum::linear(to_vec(a), b); })
      .def_static("sinusoidal",
                  [](double amp, const std::vector<double>& k, double phase) {
                    return le::InitialDatum::sinusoidal(amp, to_vec(k), phase);
                  })
      .def_static("expression",
                  [](const std::string& text, const std::vector<std::string>& labels) {
                    return le::InitialDatum::expression(le::parse_expression(text), labels);
                  })
      .def("__call__", [](const le::InitialDatum& d, const std::vector<double>& y) { return d(to_vec(y)); });

  py::class_<le::CauchySurface>(m, "CauchySurface")
      .def_readonly("level", &le::CauchySurface::level)
      .def_readonly("lipschitz", &le::CauchySurface::lipschitz);
  m.def("make_cauchy_surface",
        [](const le::Spacetime& st, double level, const le::InitialDatum& d) {
          return le::make_cauchy_surface(st, level, d);
        },
        py::arg("spacetime"), py::arg("level"), py::arg("datum"));

  py::class_<le::SolveResult>(m, "SolveResult")
      .def_readonly("value", &le::SolveResult::value)
      .def_property_readonly("minimizers",
                             [](const le::SolveResult& r) {
                               std::vector<std::vector<double>> out;
                               for (const auto& e : r.minimizers) out.push_back(from_vec(e.coords));
                               return out;
                             })
      .def_property_readonly("status", [](const le::SolveResult& r) { return std::string(le::to_string(r.status)); });

  m.def("solve_at", [](const le::Spacetime& st, const le::CauchySurface& s, const std::vector<double>& x) {
    return le::solve_at(st, s, to_event(x));
  });
  m.def("solve_future_side", [](const le::Spacetime& st, const le::CauchySurface& s, const std::vector<double>& x) {
    return le::solve_future_side(st, s, to_event(x));
  });
  m.def(
      "solve_grid",
      [](const le::Spacetime& st, const le::CauchySurface& s, double t0, double t1, int nt,
         std::vector<std::array<double, 2>> space, std::vector<int> nodes, int threads) {
        le::GridSpec g;
        g.t_begin = t0;
        g.t_end = t1;
        g.t_nodes = nt;
        g.space = std::move(space);
        g.space_nodes = nodes;
        le::SolutionField f;
        {
          py::gil_scoped_release release;
          f = le::solve_grid(st, s, g, {}, threads);
        }
        std::vector<py::ssize_t> shape{nt};
        for (int n : nodes) shape.push_back(n);
        py::array_t<double> out(shape);
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("spacetime"), py::arg("surface"), py::arg("t_begin"), py::arg("t_end"), py::arg("t_nodes"),
      py::arg("space"), py::arg("space_nodes"), py::arg("threads") = 1);

  m.def("relation", [](const le::Spacetime& st, const std::vector<double>& x, const std::vector<double>& y) {
    return std::string(le::to_string(le::relation(st, to_event(x), to_event(y))));
  });
  m.def("lorentz_distance", [](const le::Spacetime& st, const std::vector<double>& x, const std::vector<double>& y) {
    return le::lorentz_distance(st, to_event(x), to_event(y)).value;
  });
  m.def("comparison_bound_f_c", &le::comparison_bound_f_c, py::arg("c"), py::arg("s"));
  m.def("counterexample_value", [](double c, const std::vector<double>& p) {
    const le::Spacetime st = le::Spacetime::paper_minkowski_2d(make_slab(std::min(-2.0, 2.0 * c), 0.0, {{-3.0, 3.0}}));
    return le::counterexample_family(st, c)(to_event(p));
  });

  m.def(
      "run_config",
      [](const std::string& json_text, const std::string& task, const std::string& out_dir) {
        std::optional<le::Task> t;
        if (!task.empty()) {
          t = le::task_from_string(task);
          if (!t) throw le::ConfigError("unknown task '" + task + "'");
        }
        le::RunConfig cfg = le::parse_config(json_text, t);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        le::RunResult r;
        {
          py::gil_scoped_release release;
          r = le::run(cfg);
        }
        return py::make_tuple(r.exit_code, r.summary, r.report_json);
      },
      py::arg("config_json"), py::arg("task") = "", py::arg("out_dir") = "");
}
