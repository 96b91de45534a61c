#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rhfpt/config.hpp"
#include "rhfpt/deg_pt.hpp"
#include "rhfpt/io.hpp"
#include "rhfpt/mo_pt.hpp"
#include "rhfpt/nondeg_pt.hpp"
#include "rhfpt/runner.hpp"
#include "rhfpt/validation.hpp"
#include "rhfpt/version.hpp"
#include "rhfpt/wigner.hpp"

namespace py = pybind11;
using namespace rhfpt;

namespace {

ScfOptions options_from_kwargs(int max_iter, double tol_residual,
                               bool newton_refine,
                               const std::vector<Matrix>& symmetrizer,
                               unsigned seed,
                               const std::optional<Matrix>& initial_gamma) {
  ScfOptions o;
  o.max_iter = max_iter;
  o.tol_residual = tol_residual;
  o.newton_refine = newton_refine;
  o.symmetrizer = symmetrizer;
  o.seed = seed;
  o.initial_gamma = initial_gamma;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Lattice reduced-Hartree-Fock perturbation engine: self-consistent "
      "ground states with fractional occupations, density-matrix and "
      "orbital response expansions, degenerate-level expansions, and "
      "variational order checks.";
  m.attr("__version__") = kVersion;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError",
                                           PyExc_RuntimeError);
  py::register_exception<AccuracyError>(m, "AccuracyError",
                                        PyExc_RuntimeError);
  py::register_exception<StructuralError>(m, "StructuralError",
                                          PyExc_RuntimeError);

  py::class_<Tolerances>(m, "Tolerances")
      .def(py::init<>())
      .def_readwrite("spd", &Tolerances::spd)
      .def_readwrite("psd", &Tolerances::psd)
      .def_readwrite("trace", &Tolerances::trace);

  py::class_<LatticeSystem>(m, "LatticeSystem")
      .def(py::init<Matrix, Vector, Matrix, int, Tolerances>(),
           py::arg("kinetic"), py::arg("v_ext"), py::arg("kernel"),
           py::arg("n_electrons"), py::arg("tolerances") = Tolerances{})
      .def_property_readonly("n_sites", &LatticeSystem::n_sites)
      .def_property_readonly("n_electrons", &LatticeSystem::n_electrons)
      .def_property_readonly("kinetic", &LatticeSystem::kinetic)
      .def_property_readonly("v_ext", &LatticeSystem::v_ext)
      .def_property_readonly("kernel", &LatticeSystem::kernel)
      .def("coulomb_norm", &LatticeSystem::coulomb_norm, py::arg("rho"))
      .def("dual_norm", &LatticeSystem::dual_norm, py::arg("w"))
      .def("apply_kernel", &LatticeSystem::apply_kernel, py::arg("rho"))
      .def("solve_kernel", &LatticeSystem::solve_kernel, py::arg("w"));

  m.def(
      "make_ring",
      [](int n_sites, int n_electrons, double hopping, double yukawa_mass,
         double kernel_scale) {
        RingParams p{n_sites, n_electrons, hopping, yukawa_mass,
                     kernel_scale};
        return make_ring(p);
      },
      py::arg("n_sites"), py::arg("n_electrons"), py::arg("hopping") = 1.0,
      py::arg("yukawa_mass") = 1.0, py::arg("kernel_scale") = 1.0);
  m.def(
      "make_double_well",
      [](int n_sites, int n_electrons, double hopping, double depth1,
         double depth2, double pos1, double pos2, double width,
         double yukawa_mass, double kernel_scale) {
        DoubleWellParams p{n_sites, n_electrons, hopping, depth1, depth2,
                           pos1,    pos2,        width,   yukawa_mass,
                           kernel_scale};
        return make_double_well(p);
      },
      py::arg("n_sites"), py::arg("n_electrons"), py::arg("hopping") = 1.0,
      py::arg("depth1") = 1.0, py::arg("depth2") = 0.6, py::arg("pos1") = 3.0,
      py::arg("pos2") = 8.0, py::arg("width") = 1.5,
      py::arg("yukawa_mass") = 1.0, py::arg("kernel_scale") = 1.0);
  m.def(
      "make_synthetic_degenerate",
      [](int n_sites, int n_electrons, int n_partial, double gap_below,
         double gap_above, double level_spacing, double kernel_scale,
         unsigned seed) {
        SyntheticDegenerateParams p{n_sites,       n_electrons, n_partial,
                                    gap_below,     gap_above,   level_spacing,
                                    kernel_scale,  seed};
        return make_synthetic_degenerate(p);
      },
      py::arg("n_sites"), py::arg("n_electrons"), py::arg("n_partial") = 2,
      py::arg("gap_below") = 0.5, py::arg("gap_above") = 0.8,
      py::arg("level_spacing") = 0.3, py::arg("kernel_scale") = 1e-3,
      py::arg("seed") = 0);

  m.def("density_of", &density_of, py::arg("gamma"));
  m.def("energy",
        py::overload_cast<const LatticeSystem&, const Matrix&, const Vector&>(
            &energy),
        py::arg("system"), py::arg("gamma"), py::arg("w"));
  m.def("energy",
        py::overload_cast<const LatticeSystem&, const Matrix&>(&energy),
        py::arg("system"), py::arg("gamma"));
  m.def("mean_field",
        py::overload_cast<const LatticeSystem&, const Vector&, const Vector&>(
            &mean_field),
        py::arg("system"), py::arg("rho"), py::arg("w"));
  m.def("mean_field",
        py::overload_cast<const LatticeSystem&, const Vector&>(&mean_field),
        py::arg("system"), py::arg("rho"));

  py::class_<GroundState>(m, "GroundState")
      .def_readonly("gamma0", &GroundState::gamma0)
      .def_readonly("h0", &GroundState::h0)
      .def_readonly("eigvals", &GroundState::eigvals)
      .def_readonly("eigvecs", &GroundState::eigvecs)
      .def_readonly("fermi_level", &GroundState::fermi_level)
      .def_readonly("n_full", &GroundState::n_full)
      .def_readonly("n_partial", &GroundState::n_partial)
      .def_readonly("lambda_", &GroundState::lambda)
      .def_readonly("gap_below", &GroundState::gap_below)
      .def_readonly("gap_above", &GroundState::gap_above)
      .def_readonly("energy", &GroundState::energy)
      .def_readonly("n_electrons", &GroundState::n_electrons)
      .def_property_readonly("density", &GroundState::density);

  m.def(
      "solve_scf",
      [](const LatticeSystem& sys, std::optional<Vector> w, int max_iter,
         double tol_residual, bool newton_refine,
         std::vector<Matrix> symmetrizer, unsigned seed,
         std::optional<Matrix> initial_gamma) {
        const ScfOptions o =
            options_from_kwargs(max_iter, tol_residual, newton_refine,
                                symmetrizer, seed, initial_gamma);
        if (w) return solve_scf(sys, *w, o);
        return solve_scf(sys, o);
      },
      py::arg("system"), py::arg("w") = std::nullopt,
      py::arg("max_iter") = 5000, py::arg("tol_residual") = 1e-11,
      py::arg("newton_refine") = true,
      py::arg("symmetrizer") = std::vector<Matrix>{}, py::arg("seed") = 0,
      py::arg("initial_gamma") = std::nullopt,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "classify",
      [](const GroundState& gs, double tol_cluster, double occupation_tol) {
        return std::string(to_string(classify(gs, tol_cluster,
                                              occupation_tol)));
      },
      py::arg("ground_state"), py::arg("tol_cluster") = -1.0,
      py::arg("occupation_tol") = 1e-6);

  py::class_<UniquenessReport>(m, "UniquenessReport")
      .def_readonly("sigma_min", &UniquenessReport::sigma_min)
      .def_readonly("sigma_max", &UniquenessReport::sigma_max)
      .def_readonly("holds", &UniquenessReport::holds);
  m.def("uniqueness_kernel_test", &uniqueness_kernel_test,
        py::arg("ground_state"), py::arg("tol_rank_rel") = 1e-8);
  m.def("stability_ranks", &stability_ranks, py::arg("ground_state"),
        py::arg("v"));
  m.def("synthetic_ground_state", &synthetic_ground_state, py::arg("system"),
        py::arg("n_full"), py::arg("lambda_"));

  m.def(
      "contour_q",
      [](const GroundState& gs, const std::vector<Vector>& vs) {
        return contour_q(gs, vs);
      },
      py::arg("ground_state"), py::arg("potentials"));
  m.def(
      "divided_difference_q",
      [](const GroundState& gs, const std::vector<Vector>& vs) {
        return divided_difference_q(gs, vs);
      },
      py::arg("ground_state"), py::arg("potentials"));
  m.def("apply_response", &apply_response, py::arg("system"),
        py::arg("ground_state"), py::arg("rho"));
  m.def(
      "solve_screened",
      [](const LatticeSystem& sys, const GroundState& gs, const Vector& rhs,
         double tol) { return solve_screened(sys, gs, rhs, tol); },
      py::arg("system"), py::arg("ground_state"), py::arg("rhs"),
      py::arg("tol") = 1e-11);

  py::class_<NondegSeries>(m, "NondegSeries")
      .def_readonly("order", &NondegSeries::order)
      .def_readonly("rho", &NondegSeries::rho)
      .def_readonly("gamma", &NondegSeries::gamma)
      .def_readonly("energy", &NondegSeries::energy)
      .def_readonly("w_eff", &NondegSeries::w_eff)
      .def("truncated_gamma", &NondegSeries::truncated_gamma,
           py::arg("gamma0"), py::arg("beta"), py::arg("n"))
      .def("truncated_energy", &NondegSeries::truncated_energy,
           py::arg("energy0"), py::arg("beta"), py::arg("n"));
  m.def("expand", &expand, py::arg("system"), py::arg("ground_state"),
        py::arg("w"), py::arg("order"), py::arg("order_cap") = 6,
        py::call_guard<py::gil_scoped_release>());

  py::class_<MOSeries>(m, "MOSeries")
      .def_readonly("order", &MOSeries::order)
      .def_readonly("phi", &MOSeries::phi)
      .def_readonly("eps", &MOSeries::eps)
      .def("gamma_coefficient", &MOSeries::gamma_coefficient, py::arg("k"));
  m.def("mo_expand", &mo_expand, py::arg("system"), py::arg("ground_state"),
        py::arg("w"), py::arg("order"),
        py::call_guard<py::gil_scoped_release>());
  m.def("orthogonality_defects", &orthogonality_defects, py::arg("series"));

  py::class_<BlockFrame>(m, "BlockFrame")
      .def_readonly("basis", &BlockFrame::basis)
      .def_readonly("eigvals", &BlockFrame::eigvals)
      .def_readonly("n_full", &BlockFrame::n_full)
      .def_readonly("n_partial", &BlockFrame::n_partial)
      .def_readonly("fermi_level", &BlockFrame::fermi_level)
      .def_readonly("lambda_", &BlockFrame::lambda);
  py::class_<BlockCoefficient>(m, "BlockCoefficient")
      .def_readonly("a_uf", &BlockCoefficient::a_uf)
      .def_readonly("a_up", &BlockCoefficient::a_up)
      .def_readonly("a_pf", &BlockCoefficient::a_pf)
      .def_readonly("a_pp", &BlockCoefficient::a_pp)
      .def("norm", &BlockCoefficient::norm);
  py::class_<DegSeries>(m, "DegSeries")
      .def_readonly("order", &DegSeries::order)
      .def_readonly("a", &DegSeries::a)
      .def_readonly("gamma", &DegSeries::gamma)
      .def_readonly("energy", &DegSeries::energy)
      .def_readonly("frame", &DegSeries::frame);
  m.def("frame_of", &frame_of, py::arg("ground_state"));
  m.def("gamma_of", &gamma_of, py::arg("frame"), py::arg("a"),
        py::arg("box_tol") = 1e-12);
  m.def("expand_degenerate", &expand_degenerate, py::arg("system"),
        py::arg("ground_state"), py::arg("w"), py::arg("order"),
        py::arg("order_cap") = 4, py::call_guard<py::gil_scoped_release>());

  m.def("pi_project", &pi_project, py::arg("t"), py::arg("n_electrons"),
        py::arg("tol_half") = 1e-9);
  m.def("trace_identity_check", &trace_identity_check, py::arg("h"),
        py::arg("eps_f"), py::arg("gamma_prime"));

  py::class_<SlopeReport>(m, "SlopeReport")
      .def_readonly("beta_grid", &SlopeReport::beta_grid)
      .def_readonly("errors", &SlopeReport::errors)
      .def_readonly("fitted_slope", &SlopeReport::fitted_slope)
      .def_readonly("expected_slope", &SlopeReport::expected_slope)
      .def_readonly("passed", &SlopeReport::pass)
      .def_readonly("min_error", &SlopeReport::min_error)
      .def_readonly("points_used", &SlopeReport::points_used);
  py::class_<DegWignerReport>(m, "DegWignerReport")
      .def_readonly("variational", &DegWignerReport::variational)
      .def_readonly("energy_series", &DegWignerReport::energy_series);
  m.def(
      "wigner_check_nondeg",
      [](const LatticeSystem& sys, const GroundState& gs,
         const NondegSeries& series, const Vector& w, int n,
         const std::vector<double>& grid, int workers) {
        return wigner_check_nondeg(sys, gs, series, w, n, grid, {}, workers);
      },
      py::arg("system"), py::arg("ground_state"), py::arg("series"),
      py::arg("w"), py::arg("n"), py::arg("beta_grid"),
      py::arg("workers") = 1, py::call_guard<py::gil_scoped_release>());
  m.def(
      "wigner_check_deg",
      [](const LatticeSystem& sys, const GroundState& gs,
         const DegSeries& series, const Vector& w, int n,
         const std::vector<double>& grid, int workers) {
        return wigner_check_deg(sys, gs, series, w, n, grid, {}, workers);
      },
      py::arg("system"), py::arg("ground_state"), py::arg("series"),
      py::arg("w"), py::arg("n"), py::arg("beta_grid"),
      py::arg("workers") = 1, py::call_guard<py::gil_scoped_release>());

  py::class_<FdReport>(m, "FdReport")
      .def_readonly("first", &FdReport::first)
      .def_readonly("second_half", &FdReport::second_half)
      .def_readonly("first_error", &FdReport::first_error)
      .def_readonly("second_error", &FdReport::second_error);
  m.def("fd_oracle", &fd_oracle, py::arg("system"), py::arg("ground_state"),
        py::arg("w"), py::arg("step") = 5e-3,
        py::call_guard<py::gil_scoped_release>());

  m.def("random_potential", &random_potential, py::arg("system"),
        py::arg("seed"), py::arg("dual_norm") = 0.1);
  m.def("load_system", &io::load_system, py::arg("path"));
  m.def("save_ground_state", &io::save_ground_state, py::arg("path"),
        py::arg("ground_state"));
  m.def("load_ground_state", &io::load_ground_state, py::arg("path"));

  m.def(
      "run_validation",
      [](int workers) {
        std::vector<py::dict> results;
        bool ok;
        {
          std::vector<CheckResult> raw;
          {
            py::gil_scoped_release nogil;
            ok = run_validation(
                [&raw](const CheckResult& r) { raw.push_back(r); }, workers);
          }
          for (const auto& r : raw) {
            py::dict d;
            d["name"] = r.name;
            d["pass"] = r.pass;
            d["value"] = r.value;
            d["tolerance"] = r.tolerance;
            d["detail"] = r.detail;
            results.push_back(d);
          }
        }
        return py::make_tuple(ok, results);
      },
      py::arg("workers") = 1);
}
