#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "calderon/admittivity.hpp"
#include "calderon/cli.hpp"
#include "calderon/dtn.hpp"
#include "calderon/errors.hpp"
#include "calderon/estimator.hpp"
#include "calderon/gegenbauer.hpp"
#include "calderon/mesh.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/singular.hpp"

namespace py = pybind11;
using namespace calderon;

namespace {

py::dict window_dict(const FrequencyWindow& w) {
  py::dict d;
  d["k_max"] = w.k_max;
  d["empty"] = w.empty;
  d["terms"] = std::vector<double>(w.terms.begin(), w.terms.end());
  d["partition"] = py::make_tuple(w.partition.a, w.partition.b, w.partition.c);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary stability laboratory for the complex anisotropic Calderon problem";

  py::register_exception<Error>(m, "CalderonError");
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);

  m.def("gegenbauer", [](int degree, double order, cdouble z) { return gegenbauer(GegenbauerSpec{degree, order}, z); },
        py::arg("degree"), py::arg("order"), py::arg("z"));
  m.def("gegenbauer_derivative",
        [](int degree, double order, cdouble z) { return gegenbauer_derivative(GegenbauerSpec{degree, order}, z); },
        py::arg("degree"), py::arg("order"), py::arg("z"));
  m.def("ode_residual",
        [](int degree, double order, cdouble z) { return ode_residual(GegenbauerSpec{degree, order}, z); },
        py::arg("degree"), py::arg("order"), py::arg("z"));

  m.def("frequency_window",
        [](double e1, double e2, int n, double a, double b, double c) {
          return window_dict(frequency_window(e1, e2, n, Partition{a, b, c}));
        },
        py::arg("e1"), py::arg("e2"), py::arg("n"), py::arg("a") = 1.0 / 3, py::arg("b") = 1.0 / 3,
        py::arg("c") = 1.0 / 3);
  m.def("frequency_window_sweep",
        [](double e1, double e2, int n, double step) { return window_dict(frequency_window_sweep(e1, e2, n, step)); },
        py::arg("e1"), py::arg("e2"), py::arg("n"), py::arg("step") = 0.01);
  m.def("inverse_parts",
        [](const ComplexMatrix& mtx, double k) {
          const InverseParts p = inverse_parts(ComplexSymMatrix(mtx), k);
          return py::make_tuple(p.real_part, p.imag_part);
        },
        py::arg("matrix"), py::arg("k"));
  m.def("delta_h", &delta_h, py::arg("alpha"), py::arg("h"));
  m.def("half_space_inverse_quartic", &half_space_inverse_quartic, py::arg("tau"), py::arg("rho"));

  m.def("leading_term",
        [](const ComplexMatrix& frozen, const Eigen::VectorXd& z, int order, const Eigen::VectorXd& x) {
          return leading_term(make_probe(frozen, z, order), x);
        },
        py::arg("frozen"), py::arg("z"), py::arg("m"), py::arg("x"));
  m.def("h_function",
        [](const ComplexMatrix& frozen, const Eigen::VectorXd& z, int order, const Eigen::VectorXd& x) {
          return h_function(make_probe(frozen, z, order), x);
        },
        py::arg("frozen"), py::arg("z"), py::arg("m"), py::arg("x"));

  m.def("scalar_dtn",
        [](double h, double a1, double a2, double k) {
          BoundaryPatch sigma{Face::ZHi, {0.2, 0.8, 0.2, 0.8}};
          auto mesh = std::make_shared<const Mesh>(build_mesh(BoxDomain(), h, sigma));
          const AdmittivityFamily fam = scalar_identity_family(3, k);
          ForwardModel m1(mesh, fam, constant_field(a1));
          ForwardModel m2(mesh, fam, constant_field(a2));
          const LocalDtnMatrix l1 = assemble_dtn(m1);
          const LocalDtnMatrix l2 = assemble_dtn(m2, l1.basis, l1.gram);
          py::dict d;
          d["pairing1"] = l1.pairing;
          d["pairing2"] = l2.pairing;
          d["gram"] = l1.gram;
          d["star_norm"] = dtn_star_norm(l1, l2);
          return d;
        },
        py::arg("h"), py::arg("a1"), py::arg("a2"), py::arg("k") = 0.0,
        "Local DtN matrices of A = (t + ik) I on the unit cube with Sigma = [0.2,0.8]^2 on the top face.");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          std::vector<std::string> full{"calderon_lab"};
          full.insert(full.end(), args.begin(), args.end());
          int code;
          {
            py::gil_scoped_release release;
            code = run_cli(full, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
