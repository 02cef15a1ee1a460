// Python bindings: chain coefficients, single-point solves, sweeps and the phase classifier.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tbsbm/bath_chain.hpp"
#include "tbsbm/driver.hpp"
#include "tbsbm/errors.hpp"
#include "tbsbm/observables.hpp"

namespace py = pybind11;
using namespace tbsbm;

namespace {

bath::BathId bath_id(const std::string& name) {
    if (name == "z") return bath::BathId::Z;
    if (name == "x") return bath::BathId::X;
    throw ContractViolation("bath must be 'z' or 'x'");
}

py::dict chain_dict(const bath::ChainCoefficients& c) {
    py::dict d;
    d["omegas"] = c.omegas;
    d["hops"] = c.hops;
    d["eta"] = c.eta;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-bath spin-boson ground-state solvers";
    m.def("version", &driver::version);

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

    m.def(
        "chain_coefficients",
        [](double s, double alpha, std::size_t length, double omega_c, const std::string& bath) {
            return chain_dict(bath::chain_coefficients({s, alpha, omega_c, bath_id(bath)}, length));
        },
        py::arg("s"), py::arg("alpha"), py::arg("length"), py::arg("omega_c") = 1.0, py::arg("bath") = "z");
    m.def(
        "laguerre_chain",
        [](double s, double alpha, std::size_t length, double omega_c) {
            return chain_dict(bath::laguerre_chain({s, alpha, omega_c, bath::BathId::Z}, length));
        },
        py::arg("s"), py::arg("alpha"), py::arg("length"), py::arg("omega_c") = 1.0);

    py::class_<OrderParameterReport>(m, "OrderParameter")
        .def_readonly("o_z", &OrderParameterReport::o_z)
        .def_readonly("o_x", &OrderParameterReport::o_x)
        .def_readonly("zeta", &OrderParameterReport::zeta)
        .def_readonly("imaginary_residual", &OrderParameterReport::imaginary_residual)
        .def_readonly("low_confidence", &OrderParameterReport::low_confidence);

    py::class_<ObservableReport>(m, "ObservableReport")
        .def(py::init<>())
        .def_readwrite("energy", &ObservableReport::energy)
        .def_readwrite("sigma_z", &ObservableReport::sigma_z)
        .def_readwrite("sigma_x", &ObservableReport::sigma_x)
        .def_readwrite("x_displacements", &ObservableReport::x_displacements)
        .def_readwrite("z_displacements", &ObservableReport::z_displacements)
        .def_property(
            "zeta", [](const ObservableReport& r) -> py::object { return r.order ? py::cast(r.order->zeta) : py::none(); },
            [](ObservableReport& r, double z) { r.order = make_order_parameter(z, 0.0); })
        .def_readonly("order", &ObservableReport::order)
        .def("csv_row", &observable_csv_row);
    m.def("csv_header", &observable_csv_header);

    py::enum_<driver::Solver>(m, "Solver")
        .value("ED", driver::Solver::ED)
        .value("DMRG", driver::Solver::DMRG)
        .value("Variational", driver::Solver::Variational);
    py::enum_<dmrg::BasisPolicy>(m, "BasisPolicy")
        .value("Restricted", dmrg::BasisPolicy::Restricted)
        .value("AOPB", dmrg::BasisPolicy::AOPB)
        .value("SOPB", dmrg::BasisPolicy::SOPB);
    py::enum_<driver::Phase>(m, "Phase")
        .value("Localized", driver::Phase::Localized)
        .value("Delocalized", driver::Phase::Delocalized)
        .value("Critical", driver::Phase::Critical)
        .value("Unknown", driver::Phase::Unknown);

    py::class_<driver::ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("solver", &driver::ExperimentConfig::solver)
        .def_readwrite("s", &driver::ExperimentConfig::s)
        .def_readwrite("alpha_z", &driver::ExperimentConfig::alpha_z)
        .def_readwrite("alpha_x", &driver::ExperimentConfig::alpha_x)
        .def_readwrite("omega_c", &driver::ExperimentConfig::omega_c)
        .def_readwrite("bias", &driver::ExperimentConfig::bias)
        .def_readwrite("chain_length", &driver::ExperimentConfig::chain_length)
        .def_readwrite("n_ph", &driver::ExperimentConfig::n_ph)
        .def_property(
            "policy", [](const driver::ExperimentConfig& c) { return c.dmrg.policy; },
            [](driver::ExperimentConfig& c, dmrg::BasisPolicy p) { c.dmrg.policy = p; })
        .def_property(
            "bond_dim", [](const driver::ExperimentConfig& c) { return c.dmrg.bond_dim; },
            [](driver::ExperimentConfig& c, std::size_t m) { c.dmrg.bond_dim = m; })
        .def_property(
            "n_bare", [](const driver::ExperimentConfig& c) { return c.dmrg.basis.n_bare; },
            [](driver::ExperimentConfig& c, std::size_t n) { c.dmrg.basis.n_bare = n; })
        .def_property(
            "n_opt", [](const driver::ExperimentConfig& c) { return c.dmrg.basis.n_opt; },
            [](driver::ExperimentConfig& c, std::size_t n) { c.dmrg.basis.n_opt = n; })
        .def_readwrite("var_terms", &driver::ExperimentConfig::var_terms)
        .def_property(
            "var_modes", [](const driver::ExperimentConfig& c) { return c.var_grid.modes; },
            [](driver::ExperimentConfig& c, std::size_t n) { c.var_grid.modes = n; })
        .def_property(
            "var_restarts", [](const driver::ExperimentConfig& c) { return c.var_schedule.restarts; },
            [](driver::ExperimentConfig& c, int n) { c.var_schedule.restarts = n; })
        .def_readwrite("order_parameter", &driver::ExperimentConfig::order_parameter)
        .def_readwrite("seed", &driver::ExperimentConfig::seed)
        .def_readwrite("workers", &driver::ExperimentConfig::workers)
        .def(
            "set_sweep",
            [](driver::ExperimentConfig& c, const std::string& parameter, double start, double stop, double step) {
                c.sweep = {parameter, start, stop, step};
            },
            py::arg("parameter"), py::arg("start"), py::arg("stop"), py::arg("step"))
        .def("validate", &driver::ExperimentConfig::validate)
        .def("to_json", [](const driver::ExperimentConfig& c) { return c.to_json().dump(); });

    m.def("solve_point", &driver::solve_point, py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_sweep",
        [](const driver::ExperimentConfig& cfg) {
            std::vector<driver::PointResult> rows;
            {
                py::gil_scoped_release release;
                rows = driver::run_sweep(cfg);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["value"] = r.value;
                d["ok"] = r.ok;
                d["error"] = r.error;
                d["report"] = r.report;
                out.append(d);
            }
            return out;
        });
    m.def(
        "classify_phase",
        [](const ObservableReport& r, bool symmetric_line, double sigma, double zeta_band) {
            return driver::classify_phase(r, symmetric_line, {sigma, zeta_band});
        },
        py::arg("report"), py::arg("symmetric_line"), py::arg("sigma") = 0.05, py::arg("zeta_band") = 0.05);
}
