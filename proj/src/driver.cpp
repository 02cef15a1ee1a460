#include "tbsbm/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>
#include <thread>

#include "tbsbm/bath_chain.hpp"
#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/errors.hpp"
#include "tbsbm/numeric_format.hpp"
#include "tbsbm/symmetry_probe.hpp"

#ifndef TBSBM_VERSION
#define TBSBM_VERSION "unknown"
#endif

namespace tbsbm::driver {

std::string to_string(Solver solver) {
    switch (solver) {
    case Solver::ED: return "ed";
    case Solver::DMRG: return "dmrg";
    case Solver::Variational: return "variational";
    }
    return "unknown";
}

Solver solver_from_string(const std::string& name) {
    if (name == "ed") return Solver::ED;
    if (name == "dmrg") return Solver::DMRG;
    if (name == "variational") return Solver::Variational;
    throw ContractViolation("unknown solver: " + name);
}

std::vector<double> SweepAxis::values() const {
    validate();
    std::vector<double> out;
    if (stop < start) return out;
    // k * step rather than accumulation, so every point is reproducible on its own
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
}

void SweepAxis::validate() const {
    if (!(step > 0.0)) throw ContractViolation("sweep step must be positive");
    if (!std::isfinite(start) || !std::isfinite(stop)) throw ContractViolation("sweep bounds must be finite");
    if (parameter != "alpha_x" && parameter != "alpha_z" && parameter != "s" && parameter != "bias")
        throw ContractViolation("unknown sweep parameter: " + parameter);
}

void ExperimentConfig::validate() const {
    bath::BathSpec{s, alpha_z, omega_c, bath::BathId::Z}.validate();
    bath::BathSpec{s, alpha_x, omega_c, bath::BathId::X}.validate();
    if (!std::isfinite(bias)) throw DomainError("bias must be finite");
    if (chain_length < 1) throw ContractViolation("chain length must be positive");
    if (n_ph < 1) throw ContractViolation("n_ph must be positive");
    dmrg.validate();
    if (var_terms < 1) throw ContractViolation("variational term count must be positive");
    if (var_theta_points < 2) throw ContractViolation("rotation grid needs at least two points");
    if (rotation_intervals < 1) throw ContractViolation("rotation scan needs at least one interval");
    if (!(dtheta_divisor >= 1.0) || std::abs(dtheta_divisor - std::round(dtheta_divisor)) > 0.0)
        throw ContractViolation("dtheta divisor must be a positive integer");
    if (workers < 1) throw ContractViolation("need at least one worker");
    if (!(thresholds.sigma > 0.0) || !(thresholds.zeta_band > 0.0)) throw ContractViolation("classifier thresholds must be positive");
    sweep.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["solver"] = to_string(solver);
    j["s"] = s;
    j["alpha_z"] = alpha_z;
    j["alpha_x"] = alpha_x;
    j["omega_c"] = omega_c;
    j["bias"] = bias;
    j["chain_length"] = chain_length;
    j["n_ph"] = n_ph;
    j["dmrg"] = {{"policy", dmrg::to_string(dmrg.policy)},
                 {"bond_dim", dmrg.bond_dim},
                 {"sopb_a", dmrg.basis.a},
                 {"n_bare", dmrg.basis.n_bare},
                 {"n_opt", dmrg.basis.n_opt},
                 {"max_sweeps", dmrg.basis.sweeps},
                 {"convergence_tol", dmrg.basis.convergence_tol},
                 {"warmup_bias", dmrg.warmup_bias},
                 {"min_sweeps", dmrg.min_sweeps},
                 {"truncation_threshold", dmrg.truncation_threshold},
                 {"instability_tol", dmrg.instability_tol},
                 {"lanczos_tol", dmrg.lanczos_tol},
                 {"lanczos_krylov", dmrg.lanczos_krylov},
                 {"lanczos_restarts", dmrg.lanczos_restarts},
                 {"guess_noise", dmrg.guess_noise},
                 {"initial_bond", dmrg.initial_bond}};
    j["variational"] = {{"terms", var_terms},
                        {"modes", var_grid.modes},
                        {"mode_lower", var_grid.lower},
                        {"mode_upper", var_grid.upper},
                        {"restarts", var_schedule.restarts},
                        {"fixed_point_iterations", var_schedule.fixed_point_iterations},
                        {"damping", var_schedule.damping},
                        {"max_polish_iterations", var_schedule.max_polish_iterations},
                        {"newton_steps", var_schedule.newton_steps},
                        {"residual_tol", var_schedule.residual_tol},
                        {"seed_scale", var_schedule.seed_scale},
                        {"rotational", var_rotational},
                        {"theta_points", var_theta_points}};
    j["order_parameter"] = order_parameter;
    j["rotation_intervals"] = rotation_intervals;
    j["dtheta_divisor"] = dtheta_divisor;
    j["sweep"] = {{"parameter", sweep.parameter}, {"start", sweep.start}, {"stop", sweep.stop}, {"step", sweep.step}};
    j["phase_s"] = phase_s;
    j["phase_alpha"] = phase_alpha;
    j["thresholds"] = {{"sigma", thresholds.sigma}, {"zeta_band", thresholds.zeta_band}};
    j["seed"] = seed;
    j["workers"] = workers;
    return j;
}

ExperimentConfig ExperimentConfig::with(const std::string& parameter, double value) const {
    ExperimentConfig c = *this;
    if (parameter == "alpha_x")
        c.alpha_x = value;
    else if (parameter == "alpha_z")
        c.alpha_z = value;
    else if (parameter == "s")
        c.s = value;
    else if (parameter == "bias")
        c.bias = value;
    else
        throw ContractViolation("unknown parameter: " + parameter);
    return c;
}

std::string version() { return TBSBM_VERSION; }

void write_provenance(std::ostream& out, const ExperimentConfig& cfg, const std::string& kind) {
    out << "# tbsbm " << version() << ' ' << kind << '\n';
    out << "# config " << cfg.to_json().dump() << '\n';
}

mps::ChainModel chain_model(const ExperimentConfig& cfg) {
    mps::ChainModel m;
    m.chain_z = bath::chain_coefficients({cfg.s, cfg.alpha_z, cfg.omega_c, bath::BathId::Z}, cfg.chain_length);
    m.chain_x = bath::chain_coefficients({cfg.s, cfg.alpha_x, cfg.omega_c, bath::BathId::X}, cfg.chain_length);
    m.bias = cfg.bias;
    return m;
}

ed::DenseModel dense_model(const ExperimentConfig& cfg) {
    const mps::ChainModel m = chain_model(cfg);
    ed::DenseModel d;
    d.chain_z = m.chain_z;
    d.chain_x = m.chain_x;
    d.n_ph = cfg.n_ph;
    d.bias = cfg.bias;
    return d;
}

variational::ModeGrid mode_grid(const ExperimentConfig& cfg) {
    variational::ModeGrid g = variational::discretize_baths({cfg.s, cfg.alpha_z, cfg.omega_c, bath::BathId::Z},
                                                            {cfg.s, cfg.alpha_x, cfg.omega_c, bath::BathId::X}, cfg.var_grid);
    g.bias = cfg.bias;
    return g;
}

namespace {

symmetry::RotationOptions rotation_options(const ExperimentConfig& cfg) {
    symmetry::RotationOptions o;
    o.dtheta = std::numbers::pi / cfg.dtheta_divisor;
    return o;
}

ObservableReport solve_ed(const ExperimentConfig& cfg) {
    const ed::DenseModel d = dense_model(cfg);
    const ed::SpectrumResult res = ed::ground_state(d);
    const Eigen::VectorXd g = res.vectors.col(0);
    ObservableReport r = ed::dense_observables(d, g);
    if (cfg.order_parameter) r.order = symmetry::order_parameter(d, Eigen::VectorXcd(g.cast<std::complex<double>>()), rotation_options(cfg));
    return r;
}

ObservableReport solve_dmrg(const ExperimentConfig& cfg) {
    const mps::ChainModel m = chain_model(cfg);
    dmrg::DmrgConfig dc = cfg.dmrg;
    dc.seed = cfg.seed;
    const dmrg::DmrgResult res = dmrg::ground_state(m, dc);
    ObservableReport r = res.report;
    if (cfg.order_parameter) r.order = symmetry::order_parameter(m, res.state, rotation_options(cfg));
    return r;
}

ObservableReport solve_variational(const ExperimentConfig& cfg) {
    const variational::ModeGrid grid = mode_grid(cfg);
    variational::RelaxSchedule sch = cfg.var_schedule;
    sch.seed = cfg.seed;
    const variational::VariationalState start = variational::random_state(grid, cfg.var_terms, cfg.seed, sch.seed_scale);
    variational::RelaxResult best = variational::relax(start, grid, sch);
    if (cfg.var_rotational) {
        const auto rot = variational::rotational_optimization(best.state, grid, variational::default_theta_grid(cfg.var_theta_points), sch);
        if (rot.best.energy < best.energy) best = rot.best;
    }
    ObservableReport r = variational::report(best.state, grid);
    if (!cfg.order_parameter) r.order.reset();
    return r;
}

} // namespace

ObservableReport solve_point(const ExperimentConfig& cfg) {
    cfg.validate();
    switch (cfg.solver) {
    case Solver::ED: return solve_ed(cfg);
    case Solver::DMRG: return solve_dmrg(cfg);
    case Solver::Variational: return solve_variational(cfg);
    }
    throw ContractViolation("unknown solver");
}

std::vector<PointResult> fan_out(std::size_t n, std::size_t workers, const std::function<PointResult(std::size_t)>& fn) {
    std::vector<PointResult> out(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                out[k] = fn(k);
            } catch (const std::exception& e) {
                out[k].ok = false;
                out[k].error = e.what();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        work();
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return out;
}

std::vector<PointResult> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> values = cfg.sweep.values();
    return fan_out(values.size(), cfg.workers, [&](std::size_t k) {
        PointResult p;
        p.value = values[k];
        p.report = solve_point(cfg.with(cfg.sweep.parameter, values[k]));
        p.ok = true;
        return p;
    });
}

namespace {

// CSV field without separators or line breaks.
std::string sanitize(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

} // namespace

void write_sweep_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<PointResult>& rows) {
    write_provenance(out, cfg, "sweep");
    out << cfg.sweep.parameter << ",status," << observable_csv_header() << ",error\n";
    for (const auto& r : rows) {
        out << format_double(r.value) << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            out << observable_csv_row(r.report);
        else
            out << observable_csv_row(ObservableReport{});
        out << ',' << sanitize(r.error) << '\n';
    }
}

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::Localized: return "Localized";
    case Phase::Delocalized: return "Delocalized";
    case Phase::Critical: return "Critical";
    case Phase::Unknown: return "Unknown";
    }
    return "Unknown";
}

Phase classify_phase(const ObservableReport& report, bool symmetric_line, const ClassifierThresholds& t) {
    if (!report.order) return Phase::Unknown;
    if (std::abs(report.order->zeta - 1.0) > t.zeta_band) return Phase::Unknown;
    const double sz = std::abs(report.sigma_z), sx = std::abs(report.sigma_x);
    if (sz > t.sigma) return Phase::Localized;
    if (sx > t.sigma) return Phase::Delocalized;
    if (symmetric_line) return Phase::Critical;
    return Phase::Unknown;
}

PhaseDiagramResult run_phase_diagram(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.phase_s.empty() || cfg.phase_alpha.empty()) throw ContractViolation("phase diagram needs s and alpha values");
    const std::size_t ns = cfg.phase_s.size(), na = cfg.phase_alpha.size();
    const auto rows = fan_out(ns * na, cfg.workers, [&](std::size_t k) {
        ExperimentConfig c = cfg;
        c.order_parameter = true;
        c.s = cfg.phase_s[k % ns];
        c.alpha_z = c.alpha_x = cfg.phase_alpha[k / ns];
        PointResult p;
        p.report = solve_point(c);
        p.ok = true;
        return p;
    });
    PhaseDiagramResult res;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        PhasePoint pt;
        pt.s = cfg.phase_s[k % ns];
        pt.alpha = cfg.phase_alpha[k / ns];
        pt.ok = rows[k].ok;
        pt.error = rows[k].error;
        pt.report = rows[k].report;
        pt.label = pt.ok ? classify_phase(pt.report, true, cfg.thresholds) : Phase::Unknown;
        res.points.push_back(std::move(pt));
    }
    for (std::size_t a = 0; a < na; ++a) {
        PhaseTransition tr;
        tr.alpha = cfg.phase_alpha[a];
        // ascending s order, independent of the order given in the config
        std::vector<std::size_t> idx(ns);
        for (std::size_t i = 0; i < ns; ++i) idx[i] = a * ns + i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return res.points[x].s < res.points[y].s; });
        for (std::size_t i = 0; i + 1 < ns && !tr.s; ++i) {
            const PhasePoint &p = res.points[idx[i]], &q = res.points[idx[i + 1]];
            if (!p.ok || !q.ok || !p.report.order || !q.report.order) continue;
            const double zp = p.report.order->zeta, zq = q.report.order->zeta;
            if (zp < 0.5 && zq >= 0.5) tr.s = p.s + (0.5 - zp) / (zq - zp) * (q.s - p.s);
        }
        res.transitions.push_back(tr);
    }
    return res;
}

void write_phase_csv(std::ostream& out, const ExperimentConfig& cfg, const PhaseDiagramResult& result) {
    write_provenance(out, cfg, "phase-diagram");
    out << "s,alpha,status,label," << observable_csv_header() << ",error\n";
    for (const auto& p : result.points) {
        out << format_double(p.s) << ',' << format_double(p.alpha) << ',' << (p.ok ? "ok" : "failed") << ',' << to_string(p.label) << ','
            << observable_csv_row(p.ok ? p.report : ObservableReport{}) << ',' << sanitize(p.error) << '\n';
    }
}

void write_transition_csv(std::ostream& out, const ExperimentConfig& cfg, const PhaseDiagramResult& result) {
    write_provenance(out, cfg, "phase-transitions");
    out << "alpha,s_transition\n";
    for (const auto& t : result.transitions) out << format_double(t.alpha) << ',' << (t.s ? format_double(*t.s) : "") << '\n';
}

} // namespace tbsbm::driver
