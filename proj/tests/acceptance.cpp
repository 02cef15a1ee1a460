// acceptance - one PASS/FAIL line per acceptance criterion.
//
//   acceptance            run criteria 1..11
//   acceptance 4 7        run a subset
//
// Exit status is nonzero when any selected criterion fails. Tolerances are pinned in `tol` below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tbsbm/bath_chain.hpp"
#include "tbsbm/dmrg_engine.hpp"
#include "tbsbm/driver.hpp"
#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/symmetry_probe.hpp"
#include "tbsbm/variational.hpp"

using namespace tbsbm;
namespace fs = std::filesystem;

namespace tol {
constexpr double c1_energy = 1e-7;
constexpr double c1_observable = 1e-6;
constexpr double c2_gap = 1e-10;
constexpr double c2_commutator = 1e-12;
constexpr double c3_relative = 1e-10;
constexpr double c4_return = 1e-5;
constexpr double c5_unity = 1e-3;      // zeta = 1 +- this off the symmetric line
constexpr double c5_suppressed = 0.1;  // zeta below this at the symmetric point of the deep case
constexpr double c6_relative = 1e-6;
constexpr double c7_window = 5e-4;
constexpr double c8_ratio = 1.3;
constexpr double c9_strong_distance = 1.0;
constexpr double c9_weak_distance = 0.1;
constexpr double c9_agreement = 1e-3;
constexpr double c10_energy = 1e-10;
} // namespace tol

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bath::BathSpec bath_z(double s, double a) { return {s, a, 1.0, bath::BathId::Z}; }
bath::BathSpec bath_x(double s, double a) { return {s, a, 1.0, bath::BathId::X}; }

double max_observable_gap(const ObservableReport& a, const ObservableReport& b) {
    double d = std::max(std::abs(a.sigma_z - b.sigma_z), std::abs(a.sigma_x - b.sigma_x));
    for (std::size_t i = 0; i < a.x_displacements.size(); ++i) d = std::max(d, std::abs(a.x_displacements[i] - b.x_displacements[i]));
    for (std::size_t i = 0; i < a.z_displacements.size(); ++i) d = std::max(d, std::abs(a.z_displacements[i] - b.z_displacements[i]));
    return d;
}

// 1. DMRG, every policy, against dense ED on random tiny models.
Outcome ed_equivalence() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_e = 0.0, worst_o = 0.0;
    const int models = 20;
    for (int k = 0; k < models; ++k) {
        const double s = 0.2 + 0.7 * u(rng);
        const double az = 0.02 + 0.28 * u(rng), ax = 0.02 + 0.28 * u(rng);
        const std::size_t lz = 1 + (u(rng) < 0.5), lx = 1 + (u(rng) < 0.5);
        const std::size_t n = 3 + static_cast<std::size_t>(4.0 * u(rng));  // 3..6
        const double bias = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.15 * u(rng));  // lifts the doublet
        mps::ChainModel m;
        m.chain_z = bath::chain_coefficients(bath_z(s, az), lz);
        m.chain_x = bath::chain_coefficients(bath_x(s, ax), lx);
        m.bias = bias;
        ed::DenseModel d;
        d.chain_z = m.chain_z;
        d.chain_x = m.chain_x;
        d.n_ph = n;
        d.bias = bias;
        const auto ref_res = ed::ground_state(d);
        const auto ref = ed::dense_observables(d, Eigen::VectorXd(ref_res.vectors.col(0)));
        for (auto p : {dmrg::BasisPolicy::Restricted, dmrg::BasisPolicy::AOPB, dmrg::BasisPolicy::SOPB}) {
            dmrg::DmrgConfig c;
            c.policy = p;
            c.bond_dim = 64;
            c.basis.n_bare = n;
            c.basis.n_opt = n;
            c.basis.sweeps = 20;
            c.truncation_threshold = 1e-14;
            c.seed = 100 + static_cast<std::uint64_t>(k);
            const auto r = dmrg::ground_state(m, c);
            worst_e = std::max(worst_e, std::abs(r.report.energy - ref_res.energies(0)));
            worst_o = std::max(worst_o, max_observable_gap(r.report, ref));
        }
    }
    return {worst_e < tol::c1_energy && worst_o < tol::c1_observable,
            fmt("%d models x 3 policies: max |dE| = %.2e (< %.0e), max |d obs| = %.2e (< %.0e)", models, worst_e, tol::c1_energy, worst_o,
                tol::c1_observable)};
}

// 2. Exact doublet at zero bias and [H, O_z] = 0.
Outcome exact_degeneracy() {
    struct Case {
        double s, az, ax;
        std::size_t l, n;
    };
    double worst_gap = 0.0, worst_comm = 0.0;
    for (const Case& c : {Case{0.5, 0.1, 0.05, 2, 6}, Case{0.25, 0.2, 0.1, 2, 5}, Case{0.75, 0.05, 0.15, 1, 8}}) {
        ed::DenseModel d;
        d.chain_z = bath::chain_coefficients(bath_z(c.s, c.az), c.l);
        d.chain_x = bath::chain_coefficients(bath_x(c.s, c.ax), c.l);
        d.n_ph = c.n;
        const auto r = ed::ground_state(d, 2);
        worst_gap = std::max(worst_gap, r.energies(1) - r.energies(0));
        using SparseC = Eigen::SparseMatrix<std::complex<double>>;
        const SparseC h = ed::build_sparse_hamiltonian(d).cast<std::complex<double>>();
        const Eigen::VectorXcd px = ed::bath_parity_diagonal(d, bath::BathId::X).cast<std::complex<double>>();
        const SparseC oz = SparseC(ed::spin_operator(d, ed::Pauli::Z)) * px.asDiagonal();
        const SparseC comm = SparseC(h * oz) - SparseC(oz * h);
        for (int j = 0; j < comm.outerSize(); ++j)
            for (SparseC::InnerIterator it(comm, j); it; ++it) worst_comm = std::max(worst_comm, std::abs(it.value()));
    }
    return {worst_gap < tol::c2_gap && worst_comm < tol::c2_commutator,
            fmt("3 models: max doublet gap = %.2e (< %.0e), max |[H,O_z]| = %.2e (< %.0e)", worst_gap, tol::c2_gap, worst_comm,
                tol::c2_commutator)};
}

// 3. Stieltjes chain against the Laguerre closed form, evaluated here independently.
Outcome chain_mapping() {
    double worst = 0.0;
    for (double s : {0.25, 0.5, 0.6, 0.75})
        for (double wc : {1.0, 2.5}) {
            const auto c = bath::chain_coefficients({s, 0.1, wc, bath::BathId::Z}, 31);
            for (std::size_t n = 0; n < 30; ++n) {
                const double dn = static_cast<double>(n);
                const double w = wc * (2.0 * dn + 1.0 + s);
                const double t = wc * std::sqrt((dn + 1.0) * (dn + 1.0 + s));
                worst = std::max({worst, std::abs(c.omegas[n] - w) / w, std::abs(c.hops[n] - t) / t});
            }
        }
    return {worst < tol::c3_relative, fmt("n < 30, s in {0.25,0.5,0.6,0.75}, wc in {1,2.5}: max relative deviation = %.2e (< %.0e)", worst,
                                          tol::c3_relative)};
}

mps::ChainModel reduced_model(double s, double az, double ax, std::size_t l) {
    mps::ChainModel m;
    m.chain_z = bath::chain_coefficients(bath_z(s, az), l);
    m.chain_x = bath::chain_coefficients(bath_x(s, ax), l);
    return m;
}

dmrg::DmrgConfig reduced_dmrg(dmrg::BasisPolicy p) {
    dmrg::DmrgConfig c;
    c.policy = p;
    c.bond_dim = 16;
    c.basis.n_bare = 16;
    c.basis.n_opt = 8;
    c.seed = 1;
    return c;
}

// 4. 2 pi rotation returns the displacements, SOPB more faithfully than AOPB.
Outcome rotation_return() {
    const auto m = reduced_model(0.25, 0.02, 0.02, 12);
    symmetry::RotationOptions ro;
    ro.classification_tol = std::numeric_limits<double>::infinity();  // AOPB bases mix parity; measure instead of refusing
    double dev[2];
    int i = 0;
    for (auto p : {dmrg::BasisPolicy::SOPB, dmrg::BasisPolicy::AOPB}) {
        const auto r = dmrg::ground_state(m, reduced_dmrg(p));
        dev[i++] = symmetry::displacement_rotation_scan(m, r.state, symmetry::theta_grid(40), symmetry::boson_sites(m), symmetry::SiteSet::All, ro)
                       .return_deviation;
    }
    return {dev[0] < tol::c4_return && dev[1] > dev[0],
            fmt("L=12, m=16: return deviation SOPB = %.2e (< %.0e), AOPB = %.2e (> SOPB)", dev[0], tol::c4_return, dev[1])};
}

driver::ExperimentConfig reduced_sweep_config(double s, double az) {
    driver::ExperimentConfig c;
    c.solver = driver::Solver::DMRG;
    c.s = s;
    c.alpha_z = az;
    c.alpha_x = az;
    c.chain_length = 12;
    c.dmrg = reduced_dmrg(dmrg::BasisPolicy::SOPB);
    return c;
}

// 5. zeta across the symmetric line: unity off it, suppressed on it (deep), fractional at the shallow critical point.
Outcome order_signature() {
    driver::ExperimentConfig deep = reduced_sweep_config(0.25, 0.02);
    deep.sweep = {"alpha_x", 0.018, 0.022, 0.001};
    const auto rows = driver::run_sweep(deep);
    bool off_ok = true, on_ok = false, all_ok = true;
    std::string zetas;
    for (const auto& r : rows) {
        if (!r.ok || !r.report.order) {
            all_ok = false;
            continue;
        }
        const double z = r.report.order->zeta;
        zetas += fmt(" %.4f", z);
        if (std::abs(r.value - deep.alpha_z) < 1e-12)
            on_ok = z < tol::c5_suppressed;
        else
            off_ok = off_ok && std::abs(z - 1.0) <= tol::c5_unity;
    }
    const auto shallow = driver::solve_point(reduced_sweep_config(0.6, 0.1));
    const double zs = shallow.order ? shallow.order->zeta : std::numeric_limits<double>::quiet_NaN();
    const bool shallow_ok = zs > 0.0 && zs < 1.0 - tol::c5_unity;  // strictly below the unity band
    return {all_ok && off_ok && on_ok && shallow_ok,
            fmt("s=0.25 alpha_x=0.018..0.022 zeta =%s (off-line %s, at alpha_x=alpha_z %s); s=0.6 critical zeta = %.6f (%s)", zetas.c_str(),
                off_ok ? "ok" : "FAIL", on_ok ? "ok" : "FAIL: needs < 0.1", zs, shallow_ok ? "ok" : "FAIL: needs 0 < zeta < 1")};
}

// 6. Analytic residual against central differences of H - E D.
Outcome gradient_check() {
    variational::ModeGrid g = variational::discretize_baths(bath_z(0.4, 0.1), bath_x(0.4, 0.07), {6, 1e-3, 10.0});
    g.bias = 0.03;
    double worst = 0.0;
    const int states = 100;
    for (int k = 0; k < states; ++k) {
        const std::size_t terms = 1 + static_cast<std::size_t>(k % 4);
        const auto st = variational::random_state(g, terms, 5000 + static_cast<std::uint64_t>(k), 1.0);
        const double e = variational::energy_and_norm(st, g).energy;
        const Eigen::VectorXd r = variational::residual(st, g);
        const Eigen::VectorXd p = variational::pack(st);
        const double scale = r.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(p(i)));
            Eigen::VectorXd pp = p, pm = p;
            pp(i) += h;
            pm(i) -= h;
            const double fd = (variational::shifted_functional(variational::unpack(pp, terms, g.total_modes()), g, e) -
                               variational::shifted_functional(variational::unpack(pm, terms, g.total_modes()), g, e)) /
                              (2.0 * h);
            worst = std::max(worst, std::abs(fd - r(i)) / scale);
        }
    }
    return {worst < tol::c6_relative, fmt("%d random states (N=1..4, 2M=12): max |fd - residual| / max|residual| = %.2e (< %.0e)", states,
                                          worst, tol::c6_relative)};
}

struct SweepPoint {
    double alpha_x;
    double energy;
    double sigma_z;
};

// Warm-started upward sweep in alpha_x at s = 0.25, alpha_z = 0.02, M = 40, N = 4.
std::vector<SweepPoint> variational_sweep(const std::vector<double>& alphas, bool rotational, std::size_t theta_points) {
    variational::RelaxSchedule cold;
    cold.restarts = 16;
    variational::RelaxSchedule warm;
    warm.restarts = 1;
    std::vector<SweepPoint> out;
    variational::VariationalState prev;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const auto g = variational::discretize_baths(bath_z(0.25, 0.02), bath_x(0.25, alphas[k]));
        auto r = k == 0 ? variational::relax(variational::random_state(g, 4, 1), g, cold) : variational::relax(prev, g, warm);
        if (rotational) {
            auto ro = variational::rotational_optimization(r.state, g, variational::default_theta_grid(theta_points), warm);
            if (ro.best.energy < r.energy) r = std::move(ro.best);
        }
        prev = r.state;
        out.push_back({alphas[k], r.energy, variational::spin_expectations(r.state, g).sigma_z});
    }
    return out;
}

// Midpoint of the interval with the largest drop of |sigma_z|; NaN when no drop exceeds half the initial value.
double jump_location(const std::vector<SweepPoint>& pts) {
    double best = 0.0, where = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double drop = std::abs(pts[k].sigma_z) - std::abs(pts[k + 1].sigma_z);
        if (drop > best) {
            best = drop;
            where = 0.5 * (pts[k].alpha_x + pts[k + 1].alpha_x);
        }
    }
    return best > 0.5 * std::abs(pts.front().sigma_z) ? where : std::numeric_limits<double>::quiet_NaN();
}

// 7. Variational critical point with and without rotational optimization.
Outcome variational_critical_point() {
    std::vector<double> alphas;
    for (int k = 0; k <= 10; ++k) alphas.push_back(0.01875 + 2.5e-4 * k);
    const double with = jump_location(variational_sweep(alphas, true, 17));
    const double without = jump_location(variational_sweep(alphas, false, 0));
    const double dw = std::abs(with - 0.02);
    const double dn = std::isnan(without) ? std::numeric_limits<double>::infinity() : std::abs(without - 0.02);
    return {dw <= tol::c7_window && dn > dw,
            fmt("alpha_x grid 0.01875 + k 2.5e-4: jump with rotation at %.6f (|d| = %.2e <= %.0e), without at %.6f (|d| = %.2e, larger)", with, dw,
                tol::c7_window, without, dn)};
}

double slope(const std::vector<SweepPoint>& pts) {
    double mx = 0, my = 0;
    for (const auto& p : pts) mx += p.alpha_x, my += p.energy;
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (const auto& p : pts) sxy += (p.alpha_x - mx) * (p.energy - my), sxx += (p.alpha_x - mx) * (p.alpha_x - mx);
    return sxy / sxx;
}

// 8. E_g(alpha_x) has a steeper slope on the delocalized side.
Outcome slope_discontinuity() {
    variational::RelaxSchedule cold;
    cold.restarts = 8;
    variational::RelaxSchedule warm;
    warm.restarts = 1;
    auto solve = [&](double ax) {
        const auto g = variational::discretize_baths(bath_z(0.25, 0.02), bath_x(0.25, ax));
        auto r = variational::relax(variational::random_state(g, 4, 1), g, cold);
        auto ro = variational::rotational_optimization(r.state, g, variational::default_theta_grid(9), warm);
        if (ro.best.energy < r.energy) r = std::move(ro.best);
        return SweepPoint{ax, r.energy, variational::spin_expectations(r.state, g).sigma_z};
    };
    std::vector<SweepPoint> loc, deloc;
    for (double ax : {0.0185, 0.019, 0.0195}) loc.push_back(solve(ax));
    for (double ax : {0.0205, 0.021, 0.0215}) deloc.push_back(solve(ax));
    bool phases = true;
    for (const auto& p : loc) phases = phases && std::abs(p.sigma_z) > 0.5;
    for (const auto& p : deloc) phases = phases && std::abs(p.sigma_z) < 0.05;
    const double sl = slope(loc), sd = slope(deloc);
    const double ratio = std::abs(sd) / std::abs(sl);
    return {phases && ratio > tol::c8_ratio,
            fmt("s=0.25, alpha_z=0.02: dE/dalpha_x localized = %.4f, delocalized = %.4f, ratio = %.3f (> %.1f)%s", sl, sd, ratio, tol::c8_ratio,
                phases ? "" : ", phases not as expected")};
}

struct Centroids {
    double ed_x, ed_z, var_x, var_z;
};

Centroids single_mode_centroids(double lz, double lx) {
    const double bias = 0.01;  // selects one member of the strong-coupling doublet
    ed::DenseModel d;
    d.chain_z = ed::single_mode_chain(1.0, lz / 2.0);
    d.chain_x = ed::single_mode_chain(1.0, lx / 2.0);
    d.n_ph = 60;
    d.bias = bias;
    const auto sp = ed::ground_state(d);
    const auto pg = ed::PopulationGrid::uniform(-12, 12, 241, -12, 12, 241);
    const auto pe = ed::single_mode_population(d, Eigen::VectorXcd(sp.vectors.col(0).cast<std::complex<double>>()), pg);
    const auto g = variational::single_mode_grid(1.0, lz, lx, bias);
    const auto r = variational::relax(variational::random_state(g, 4, 1), g);
    const auto pv = variational::phonon_population(r.state, pg, 1, 0);
    return {pe.centroid_x, pe.centroid_z, pv.centroid_x, pv.centroid_z};
}

// 9. Centroid of P(x, z) off the origin at strong coupling, at it at weak coupling; ED and variational agree.
Outcome phase_geometry() {
    const Centroids strong = single_mode_centroids(10.0, 5.0), weak = single_mode_centroids(0.1, 0.05);
    const double ds = std::hypot(strong.ed_x, strong.ed_z), dw = std::hypot(weak.ed_x, weak.ed_z);
    const double agree = std::max({std::abs(strong.ed_x - strong.var_x), std::abs(strong.ed_z - strong.var_z), std::abs(weak.ed_x - weak.var_x),
                                   std::abs(weak.ed_z - weak.var_z)});
    return {ds > tol::c9_strong_distance && dw < tol::c9_weak_distance && agree < tol::c9_agreement,
            fmt("lambda/w=10: |c| = %.4f (> 1); lambda/w=0.1: |c| = %.4f (< 0.1); max |c_ED - c_var| = %.2e (< %.0e)", ds, dw, agree,
                tol::c9_agreement)};
}

// 10. T(theta) leaves the energy invariant at alpha_z = alpha_x; zeta(theta) peaks at multiples of pi/2.
Outcome u1_invariance() {
    const auto g = variational::discretize_baths(bath_z(0.25, 0.02), bath_x(0.25, 0.02));
    variational::RelaxSchedule sch;
    sch.restarts = 8;
    const auto r = variational::relax(variational::random_state(g, 4, 1), g, sch);
    const auto thetas = variational::default_theta_grid(400);
    double worst = 0.0;
    for (double t : thetas) worst = std::max(worst, std::abs(variational::energy_and_norm(variational::rotate(r.state, g, t), g).energy - r.energy));
    const auto scan = variational::zeta_scan(r.state, g, thetas);
    const auto peaks = variational::zeta_peaks(scan);
    const double step = thetas[1] - thetas[0];
    bool peaks_ok = peaks.size() == 5;
    std::string where;
    for (double p : peaks) where += fmt(" %.4f", p / std::numbers::pi);
    for (double e : {0.0, 0.5, 1.0, 1.5, 2.0})
        peaks_ok = peaks_ok && std::any_of(peaks.begin(), peaks.end(), [&](double p) { return std::abs(p - e * std::numbers::pi) <= step; });
    return {worst < tol::c10_energy && peaks_ok,
            fmt("400 angles: max |E(theta) - E(0)| = %.2e (< %.0e); zeta peaks at theta/pi =%s (expect 0, 0.5, 1, 1.5, 2 within %.4f)", worst,
                tol::c10_energy, where.c_str(), step / std::numbers::pi)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// 11. Every CLI subcommand reproduces its outputs byte for byte.
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("tbsbm_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "sweep.cfg");
        cfg << "solver = ed\nchain_length = 2\nn_ph = 4\nbias = 0.02\nsweep_start = 0.05\nsweep_stop = 0.2\nsweep_step = 0.05\nseed = 11\n";
    }
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"chain-coeffs", "--chain_length 30 --s 0.3"},
        {"ed", "--chain_length 2 --n_ph 5 --bias 0.04"},
        {"dmrg", "--chain_length 4 --bond_dim 8 --n_bare 6 --n_opt 4 --bias 0.03 --seed 9"},
        {"variational", "--var_modes 6 --var_terms 2 --var_restarts 3 --bias 0.01 --seed 4"},
        {"sweep", "--config " + (root / "sweep.cfg").string() + " --workers 3"},
        {"rotation-scan", "--chain_length 3 --bond_dim 8 --n_bare 6 --n_opt 4 --alpha_z 0.05 --alpha_x 0.05 --rotation_intervals 8"},
        {"zeta-scan", "--var_modes 6 --var_terms 2 --var_restarts 3 --alpha_z 0.05 --alpha_x 0.05 --var_theta_points 41"},
        {"phase-diagram", "--solver ed --chain_length 1 --n_ph 4 --phase_s 0.3 0.6 0.9 --phase_alpha 0.05 0.1 --workers 2"}};
    std::size_t files = 0;
    std::string bad;
    for (const auto& [cmd, args] : runs) {
        for (const char* tag : {"a", "b"}) {
            const std::string line =
                std::string(TBSBM_CLI_PATH) + " " + cmd + " " + args + " --out " + (root / tag / cmd).string() + " > /dev/null 2>&1";
            if (std::system(line.c_str()) != 0) bad += " " + cmd + "(exit)";
        }
        for (const auto& e : fs::directory_iterator(root / "a" / cmd)) {
            ++files;
            const std::string a = slurp(e.path());
            if (a.empty() || a != slurp(root / "b" / cmd / e.path().filename())) bad += " " + cmd + "/" + e.path().filename().string();
        }
    }
    fs::remove_all(root);
    return {bad.empty() && files >= runs.size(),
            fmt("%zu subcommands, %zu output files compared byte for byte%s%s", runs.size(), files, bad.empty() ? "" : "; mismatches:", bad.c_str())};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"ED-oracle equivalence", ed_equivalence},
        {"exact degeneracy", exact_degeneracy},
        {"chain-mapping cross-validation", chain_mapping},
        {"rotation-return precision", rotation_return},
        {"order-parameter phase signature", order_signature},
        {"variational gradient check", gradient_check},
        {"variational critical point", variational_critical_point},
        {"slope discontinuity", slope_discontinuity},
        {"single-mode phase geometry", phase_geometry},
        {"U(1) invariance", u1_invariance},
        {"determinism", determinism}};
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
            return 2;
        }
        selected.push_back(k);
    }
    if (selected.empty())
        for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);

    int failed = 0;
    for (int k : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(k - 1)].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-34s %s  %s  [%.1f s]\n", k, criteria[static_cast<std::size_t>(k - 1)].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), dt);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
