#include "antiplane/cli.hpp"
#include "antiplane/predictor.hpp"
#include "antiplane/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace antiplane;

namespace {

// Python-facing core tuples: (m, n, "up" | "down", sign)
using CoreTuple = std::tuple<int, int, std::string, int>;

Core to_core(const CoreTuple& t) {
  const auto& [m, n, o, s] = t;
  if (o != "up" && o != "down") throw std::invalid_argument("orientation must be \"up\" or \"down\"");
  if (s != 1 && s != -1) throw std::invalid_argument("sign must be +1 or -1");
  return {Cell{{m, n}, o == "up" ? Orientation::up : Orientation::down}, s};
}

CoreTuple from_core(const Core& c) {
  return {c.cell.anchor.m, c.cell.anchor.n, c.cell.orientation == Orientation::up ? "up" : "down", c.sign};
}

// pybind11 holders cannot be shared_ptr<const T>
using Handle = std::shared_ptr<LatticeComplex>;
Handle handle(const ComplexPtr& c) { return std::const_pointer_cast<LatticeComplex>(c); }

Displacement as_displacement(const Handle& c, const Eigen::VectorXd& v) { return {c, v}; }

py::dict equilibrate(const Handle& complex, const std::vector<CoreTuple>& cores, const CoreCorrector& core,
                     double tol, std::optional<double> truncation_radius) {
  std::vector<Core> list;
  for (const auto& t : cores) list.push_back(to_core(t));
  const DislocationConfig config(list);
  Displacement z;
  double R = 0.0;
  if (complex->kind() == DomainKind::ball) {
    R = truncation_radius.value_or(default_radius_infinite(config, core));
    z = assemble_predictor_infinite(config, core, R, complex);
  } else {
    const BoundaryCorrector corr = solve_boundary_corrector(complex, config);
    R = truncation_radius.value_or(default_radius_polygon(config, core, *complex));
    z = assemble_predictor_polygon(config, core, R, complex, corr);
  }
  NewtonOptions opt;
  opt.tol = tol;
  EquilibriumReport rep;
  {
    py::gil_scoped_release release;
    rep = newton_correct({complex, core.potential}, z, opt);
  }
  std::vector<CoreTuple> found;
  for (const auto& c : rep.cores) found.push_back(from_core(c));
  py::dict d;
  d["y"] = (z + rep.w).values();
  d["predictor"] = z.values();
  d["w"] = rep.w.values();
  d["dw_norm"] = rep.dw_norm;
  d["residual_initial"] = rep.residual_initial;
  d["residual_final"] = rep.residual_final;
  d["lambda_min"] = rep.lambda_min;
  d["newton_iters"] = rep.newton_iters;
  d["truncation_radius"] = R;
  d["cores"] = found;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Anti-plane screw dislocation statics on the triangular lattice";

  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InstabilityError>(m, "InstabilityError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<LatticeComplex, Handle>(m, "Complex")
      .def_property_readonly("num_sites", &LatticeComplex::num_sites)
      .def_property_readonly("num_bonds", &LatticeComplex::num_bonds)
      .def_property_readonly("num_cells", &LatticeComplex::num_cells)
      .def_property_readonly("anchor", &LatticeComplex::anchor)
      .def_property_readonly("kind", [](const LatticeComplex& c) { return c.kind() == DomainKind::ball ? "ball" : "polygon"; })
      .def_property_readonly("sites",
                             [](const LatticeComplex& c) {
                               Eigen::MatrixX2i s(static_cast<Eigen::Index>(c.num_sites()), 2);
                               for (std::size_t i = 0; i < c.num_sites(); ++i)
                                 s.row(static_cast<Eigen::Index>(i)) << c.sites()[i].m, c.sites()[i].n;
                               return s;
                             })
      .def_property_readonly("positions",
                             [](const LatticeComplex& c) {
                               Eigen::MatrixX2d p(static_cast<Eigen::Index>(c.num_sites()), 2);
                               for (std::size_t i = 0; i < c.num_sites(); ++i)
                                 p.row(static_cast<Eigen::Index>(i)) = c.positions()[i].transpose();
                               return p;
                             })
      .def("index_of", [](const LatticeComplex& c, int mm, int nn) { return c.index_of({mm, nn}); })
      .def("__repr__", [](const LatticeComplex& c) {
        std::ostringstream s;
        s << "<Complex " << (c.kind() == DomainKind::ball ? "ball" : "polygon") << " with " << c.num_sites()
          << " sites>";
        return s.str();
      });

  m.def("build_ball", [](double r) { return handle(build_ball(r)); }, py::arg("radius"));
  m.def("build_hexagon", [](int k) { return handle(build_hexagon(k)); }, py::arg("k"));
  m.def(
      "build_polygon",
      [](const std::vector<std::pair<int, int>>& corners) {
        std::vector<LatticeSite> c;
        for (const auto& [a, b] : corners) c.push_back({a, b});
        return handle(build_polygon(c));
      },
      py::arg("corners"));

  py::class_<PeriodicPotential>(m, "Potential")
      .def_readonly("kind", &PeriodicPotential::kind)
      .def_readonly("parameter", &PeriodicPotential::parameter)
      .def_readonly("smooth", &PeriodicPotential::smooth)
      .def("__call__", [](const PeriodicPotential& p, double r) { return p.value(r); });
  m.def("psi_cos", &make_psi_cos, py::arg("kappa") = 1.0);
  m.def("psi_lin", &make_psi_lin, py::arg("lam") = 1.0);

  m.def(
      "hat_y", [](double x1, double x2) { return hat_y(Vec2(x1, x2)); }, py::arg("x1"), py::arg("x2"));
  m.def(
      "hat_y_on", [](const Handle& c) { return hat_y_on(c).values(); }, py::arg("complex"));

  m.def(
      "energy",
      [](const Handle& c, const PeriodicPotential& psi, const Eigen::VectorXd& y) {
        return energy({c, psi}, as_displacement(c, y));
      },
      py::arg("complex"), py::arg("psi"), py::arg("y"));
  m.def(
      "gradient",
      [](const Handle& c, const PeriodicPotential& psi, const Eigen::VectorXd& y) {
        return gradient({c, psi}, as_displacement(c, y));
      },
      py::arg("complex"), py::arg("psi"), py::arg("y"));
  m.def(
      "dual_norm",
      [](const Handle& c, const PeriodicPotential& psi, const Eigen::VectorXd& residual) {
        return dual_norm({c, psi}, residual);
      },
      py::arg("complex"), py::arg("psi"), py::arg("residual"));
  m.def(
      "min_eigenvalue",
      [](const Handle& c, const PeriodicPotential& psi, const Eigen::VectorXd& y, double tol) {
        py::gil_scoped_release release;
        return min_eigenvalue({c, psi}, as_displacement(c, y), tol);
      },
      py::arg("complex"), py::arg("psi"), py::arg("y"), py::arg("tol") = 1e-8);
  m.def(
      "detect_cores",
      [](const Handle& c, const Eigen::VectorXd& y) {
        std::vector<CoreTuple> out;
        for (const auto& core : detect_cores(bond_length_form(as_displacement(c, y)))) out.push_back(from_core(core));
        return out;
      },
      py::arg("complex"), py::arg("y"));

  py::class_<CoreCorrector>(m, "CoreCorrector")
      .def_readonly("lambda_d", &CoreCorrector::lambda_d_estimate)
      .def_readonly("window_radius", &CoreCorrector::window_radius)
      .def_readonly("residual", &CoreCorrector::residual)
      .def_readonly("newton_iters", &CoreCorrector::newton_iters)
      .def_readonly("potential", &CoreCorrector::potential)
      .def_property_readonly("decay_exponent", [](const CoreCorrector& c) { return c.decay_fit.slope; })
      .def_property_readonly("complex", [](const CoreCorrector& c) { return handle(c.u.complex()); })
      .def_property_readonly("u", [](const CoreCorrector& c) { return c.u.values(); });
  m.def(
      "compute_core_corrector",
      [](double window_radius, const PeriodicPotential& psi, double tol) {
        CoreCorrectorOptions opt;
        opt.tol = tol;
        const ComplexPtr w = build_ball(window_radius);
        py::gil_scoped_release release;
        return compute_core_corrector({w, psi}, opt);
      },
      py::arg("window_radius") = 64.0, py::arg("psi") = make_psi_cos(1.0), py::arg("tol") = 1e-9);

  m.def("equilibrate", &equilibrate, py::arg("complex"), py::arg("cores"), py::arg("core"), py::arg("tol") = 1e-8,
        py::arg("truncation_radius") = py::none(),
        "Predictor plus Newton correction; returns a dict with y, w, lambda_min and the detected cores.");

  m.def(
      "parse_manifest",
      [](const std::string& text) { return to_json(parse_manifest(nlohmann::json::parse(text))).dump(); },
      py::arg("json_text"), "Validates a manifest and returns its canonical JSON serialization.");
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a subcommand; returns (exit_code, stdout, stderr).");
  m.attr("__version__") = tool_version();
}
