// tbsbm - command-line front end for the two-bath spin-boson solvers
//
// Every option can also be given in a --config file as `name = value` lines (lists as [a, b]).
// Exit status: 0 when every solve succeeded, 1 when any point failed, CLI11 codes for usage errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tbsbm/bath_chain.hpp"
#include "tbsbm/driver.hpp"
#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/numeric_format.hpp"
#include "tbsbm/symmetry_probe.hpp"
#include "tbsbm/variational.hpp"

namespace fs = std::filesystem;
using namespace tbsbm;
using driver::ExperimentConfig;

namespace {

struct Cli {
    ExperimentConfig cfg;
    std::string solver{"dmrg"};
    std::string policy{"SOPB"};
    std::string out{"."};
};

void bind(CLI::App& app, Cli& c) {
    ExperimentConfig& k = c.cfg;
    app.add_option("--solver", c.solver, "ed | dmrg | variational")->check(CLI::IsMember({"ed", "dmrg", "variational"}));
    app.add_option("--policy", c.policy, "DMRG basis policy")->check(CLI::IsMember({"Restricted", "AOPB", "SOPB"}));
    app.add_option("--s", k.s, "spectral exponent");
    app.add_option("--alpha_z", k.alpha_z, "z-bath coupling");
    app.add_option("--alpha_x", k.alpha_x, "x-bath coupling");
    app.add_option("--omega_c", k.omega_c, "cutoff frequency");
    app.add_option("--bias", k.bias, "physical bias epsilon, term (epsilon / 2) sigma^z");
    app.add_option("--chain_length", k.chain_length, "sites per bath chain");
    app.add_option("--n_ph", k.n_ph, "ED Fock truncation per site");
    app.add_option("--bond_dim", k.dmrg.bond_dim, "DMRG bond dimension");
    app.add_option("--n_bare", k.dmrg.basis.n_bare, "bare Fock dimension of the active site");
    app.add_option("--n_opt", k.dmrg.basis.n_opt, "optimized / restricted basis dimension");
    app.add_option("--sopb_a", k.dmrg.basis.a, "SOPB mixing weight a");
    app.add_option("--max_sweeps", k.dmrg.basis.sweeps, "sweep cap per stage");
    app.add_option("--convergence_tol", k.dmrg.basis.convergence_tol, "relative energy change per sweep");
    app.add_option("--warmup_bias", k.dmrg.warmup_bias, "symmetry-breaking field of the warmup stage");
    app.add_option("--truncation_threshold", k.dmrg.truncation_threshold, "SVD truncated-weight target");
    app.add_option("--lanczos_restarts", k.dmrg.lanczos_restarts, "Lanczos restarts per bond update");
    app.add_option("--var_terms", k.var_terms, "coherent terms per spin branch");
    app.add_option("--var_modes", k.var_grid.modes, "discretized modes per bath");
    app.add_option("--var_lower", k.var_grid.lower, "lowest mode bin edge / omega_c");
    app.add_option("--var_upper", k.var_grid.upper, "highest mode bin edge / omega_c");
    app.add_option("--var_restarts", k.var_schedule.restarts, "relaxation trajectories");
    app.add_option("--var_residual_tol", k.var_schedule.residual_tol, "stationarity target");
    app.add_option("--var_newton_steps", k.var_schedule.newton_steps, "Newton refinement steps");
    app.add_option("--var_rotational", k.var_rotational, "rotational optimization over theta");
    app.add_option("--var_theta_points", k.var_theta_points, "theta grid points on [0, 2 pi]");
    app.add_option("--order_parameter", k.order_parameter, "compute <O_z>, <O_x> and zeta");
    app.add_option("--rotation_intervals", k.rotation_intervals, "theta intervals of a rotation scan");
    app.add_option("--dtheta_divisor", k.dtheta_divisor, "parity step dtheta = pi / divisor");
    app.add_option("--sweep_parameter", k.sweep.parameter, "swept parameter")->check(CLI::IsMember({"alpha_x", "alpha_z", "s", "bias"}));
    app.add_option("--sweep_start", k.sweep.start, "first sweep value");
    app.add_option("--sweep_stop", k.sweep.stop, "last sweep value (inclusive)");
    app.add_option("--sweep_step", k.sweep.step, "sweep increment");
    app.add_option("--phase_s", k.phase_s, "phase-diagram s values");
    app.add_option("--phase_alpha", k.phase_alpha, "phase-diagram alpha values");
    app.add_option("--theta_loc", k.thresholds.sigma, "classifier magnetization threshold");
    app.add_option("--zeta_band", k.thresholds.zeta_band, "classifier band around zeta = 1");
    app.add_option("--seed", k.seed, "random seed");
    app.add_option("--workers", k.workers, "parallel sweep points")->check(CLI::PositiveNumber);
    app.add_option("--out", c.out, "output directory");
    app.set_config("--config", "", "key = value configuration file");
}

void resolve(Cli& c) {
    c.cfg.solver = driver::solver_from_string(c.solver);
    c.cfg.dmrg.policy = dmrg::policy_from_string(c.policy);
    c.cfg.validate();
    fs::create_directories(c.out);
}

std::ofstream open(const Cli& c, const std::string& name) {
    std::ofstream f(fs::path(c.out) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(c.out) / name).string());
    return f;
}

nlohmann::json provenance(const ExperimentConfig& cfg) { return {{"version", driver::version()}, {"config", cfg.to_json()}}; }

void write_report(const Cli& c, const ObservableReport& r, const std::string& kind) {
    auto f = open(c, "observables.csv");
    driver::write_provenance(f, c.cfg, kind);
    f << observable_csv_header() << '\n' << observable_csv_row(r) << '\n';
}

int cmd_chain(const Cli& c) {
    const mps::ChainModel m = driver::chain_model(c.cfg);
    for (auto [name, chain] : {std::pair{"chain_z.csv", &m.chain_z}, std::pair{"chain_x.csv", &m.chain_x}}) {
        auto f = open(c, name);
        driver::write_provenance(f, c.cfg, "chain-coeffs");
        bath::write_chain_csv(f, *chain);
    }
    return 0;
}

int cmd_ed(const Cli& c) {
    const ed::DenseModel d = driver::dense_model(c.cfg);
    const ed::SpectrumResult res = ed::ground_state(d);
    auto f = open(c, "ed.json");
    f << ed::to_json(res, provenance(c.cfg)).dump(2) << '\n';
    ExperimentConfig cfg = c.cfg;
    cfg.solver = driver::Solver::ED;
    write_report(c, driver::solve_point(cfg), "ed");
    return 0;
}

int cmd_dmrg(const Cli& c) {
    const mps::ChainModel m = driver::chain_model(c.cfg);
    dmrg::DmrgConfig dc = c.cfg.dmrg;
    dc.seed = c.cfg.seed;
    const dmrg::DmrgResult res = dmrg::ground_state(m, dc);
    ObservableReport r = res.report;
    if (c.cfg.order_parameter) {
        symmetry::RotationOptions o;
        o.dtheta = std::numbers::pi / c.cfg.dtheta_divisor;
        r.order = symmetry::order_parameter(m, res.state, o);
    }
    write_report(c, r, "dmrg");
    nlohmann::json j = dmrg::checkpoint(m, dc, res);
    j["provenance"] = provenance(c.cfg);
    open(c, "checkpoint.json") << j.dump() << '\n';
    return res.converged ? 0 : 1;
}

variational::RelaxResult variational_solve(const ExperimentConfig& cfg, const variational::ModeGrid& grid) {
    variational::RelaxSchedule sch = cfg.var_schedule;
    sch.seed = cfg.seed;
    variational::RelaxResult best = variational::relax(variational::random_state(grid, cfg.var_terms, cfg.seed, sch.seed_scale), grid, sch);
    if (cfg.var_rotational) {
        const auto rot = variational::rotational_optimization(best.state, grid, variational::default_theta_grid(cfg.var_theta_points), sch);
        if (rot.best.energy < best.energy) best = rot.best;
    }
    return best;
}

int cmd_variational(const Cli& c) {
    const variational::ModeGrid grid = driver::mode_grid(c.cfg);
    const auto best = variational_solve(c.cfg, grid);
    ObservableReport r = variational::report(best.state, grid);
    if (!c.cfg.order_parameter) r.order.reset();
    write_report(c, r, "variational");
    nlohmann::json j = variational::to_json(best.state);
    j["energy"] = best.energy;
    j["residual"] = best.residual;
    j["converged"] = best.converged;
    j["provenance"] = provenance(c.cfg);
    open(c, "state.json") << j.dump() << '\n';
    return 0;
}

int cmd_sweep(const Cli& c) {
    const auto rows = driver::run_sweep(c.cfg);
    auto f = open(c, "sweep.csv");
    driver::write_sweep_csv(f, c.cfg, rows);
    int status = 0;
    for (const auto& r : rows)
        if (!r.ok) {
            std::cerr << "point " << format_double(r.value) << " failed: " << r.error << '\n';
            status = 1;
        }
    return status;
}

int cmd_rotation(const Cli& c) {
    const mps::ChainModel m = driver::chain_model(c.cfg);
    dmrg::DmrgConfig dc = c.cfg.dmrg;
    dc.seed = c.cfg.seed;
    const dmrg::DmrgResult res = dmrg::ground_state(m, dc);
    symmetry::RotationOptions o;
    o.dtheta = std::numbers::pi / c.cfg.dtheta_divisor;
    const auto scan = symmetry::displacement_rotation_scan(m, res.state, symmetry::theta_grid(c.cfg.rotation_intervals),
                                                           symmetry::boson_sites(m), symmetry::SiteSet::All, o);
    auto f = open(c, "rotation.csv");
    driver::write_provenance(f, c.cfg, "rotation-scan");
    f << "# return_deviation " << format_double(scan.return_deviation) << '\n';
    symmetry::write_rotation_csv(f, scan);
    return 0;
}

int cmd_zeta(const Cli& c) {
    const variational::ModeGrid grid = driver::mode_grid(c.cfg);
    const auto best = variational_solve(c.cfg, grid);
    const auto scan = variational::zeta_scan(best.state, grid, variational::default_theta_grid(c.cfg.var_theta_points));
    auto f = open(c, "zeta.csv");
    driver::write_provenance(f, c.cfg, "zeta-scan");
    f << "# peaks";
    for (double p : variational::zeta_peaks(scan)) f << ' ' << format_double(p);
    f << "\ntheta,o_z,o_x,zeta,energy\n";
    for (std::size_t k = 0; k < scan.thetas.size(); ++k)
        f << format_double(scan.thetas[k]) << ',' << format_double(scan.o_z[k]) << ',' << format_double(scan.o_x[k]) << ','
          << format_double(scan.zeta[k]) << ',' << format_double(scan.energies[k]) << '\n';
    return 0;
}

int cmd_phase(const Cli& c) {
    const auto res = driver::run_phase_diagram(c.cfg);
    auto f = open(c, "phase.csv");
    driver::write_phase_csv(f, c.cfg, res);
    auto t = open(c, "transitions.csv");
    driver::write_transition_csv(t, c.cfg, res);
    int status = 0;
    for (const auto& p : res.points)
        if (!p.ok) {
            std::cerr << "point s=" << format_double(p.s) << " alpha=" << format_double(p.alpha) << " failed: " << p.error << '\n';
            status = 1;
        }
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-bath spin-boson ground states: chain mapping, ED, DMRG with optimized bases, variational ansatz"};
    app.set_version_flag("--version", driver::version());
    Cli cli;
    bind(app, cli);
    app.require_subcommand(1);
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"chain-coeffs", "chain coefficients of both baths"},
        {"ed", "exact diagonalisation of a small chain model"},
        {"dmrg", "DMRG ground state and observables"},
        {"variational", "variational ground state on the discretized baths"},
        {"sweep", "observables along one parameter axis"},
        {"rotation-scan", "displacements under incremental parity rotation of a DMRG state"},
        {"zeta-scan", "order parameter along the rotation T(theta) of a variational state"},
        {"phase-diagram", "zeta and phase labels on the symmetric line over (s, alpha)"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();
    CLI11_PARSE(app, argc, argv);

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        resolve(cli);
        if (cmd == "chain-coeffs") return cmd_chain(cli);
        if (cmd == "ed") return cmd_ed(cli);
        if (cmd == "dmrg") return cmd_dmrg(cli);
        if (cmd == "variational") return cmd_variational(cli);
        if (cmd == "sweep") return cmd_sweep(cli);
        if (cmd == "rotation-scan") return cmd_rotation(cli);
        if (cmd == "zeta-scan") return cmd_zeta(cli);
        if (cmd == "phase-diagram") return cmd_phase(cli);
    } catch (const std::exception& e) {
        std::cerr << "tbsbm " << cmd << ": " << e.what() << '\n';
        return 1;
    }
    return 1;
}
