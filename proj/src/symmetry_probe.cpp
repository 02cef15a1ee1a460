#include "tbsbm/symmetry_probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tbsbm/errors.hpp"
#include "tbsbm/numeric_format.hpp"

namespace tbsbm::symmetry {

namespace {

using complex = std::complex<double>;

std::size_t step_count(double theta, double dtheta) {
    if (!(dtheta > 0.0)) throw ContractViolation("rotation step must be positive");
    if (theta < 0.0) throw ContractViolation("rotation angle must be non-negative");
    const double ratio = theta / dtheta;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) throw ContractViolation("rotation step must divide the angle");
    return static_cast<std::size_t>(rounded);
}

bool selected(const mps::ChainModel& model, std::size_t site, SiteSet set) {
    if (!model.is_boson(site)) return false;
    if (set == SiteSet::All) return true;
    return (model.bath_of(site) == bath::BathId::X) == (set == SiteSet::XBath);
}

struct SiteStepper {
    std::size_t site;
    Eigen::MatrixXcd step;
};

std::vector<SiteStepper> steppers(const mps::ComplexMps& state, const mps::ChainModel& model, SiteSet set,
                                  const RotationOptions& opts) {
    std::vector<SiteStepper> out;
    for (std::size_t j = 0; j < state.sites(); ++j) {
        if (!selected(model, j, set)) continue;
        const ParityGenerator gen = parity_generator(state.bases[j]);
        if (gen.classification_residual > opts.classification_tol)
            throw NumericalInstability("even/odd classification ambiguous on site", j);
        out.push_back({j, parity_step_matrix(gen, opts.dtheta)});
    }
    return out;
}

void advance(mps::ComplexMps& state, const std::vector<SiteStepper>& st, std::size_t steps) {
    for (std::size_t k = 0; k < steps; ++k)
        for (const auto& s : st) mps::apply_site_operator(state, s.site, s.step);
}

std::vector<double> displacements(const mps::ComplexMps& state, const std::vector<std::size_t>& sites) {
    std::vector<double> x;
    for (std::size_t j : sites) {
        const Eigen::MatrixXcd pos = state.bases[j].position().cast<complex>();
        x.push_back(mps::local_expectation(state, j, pos).real());
    }
    return x;
}

Eigen::MatrixXcd pauli(char which) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    if (which == 'z') {
        m(0, 0) = 1.0;
        m(1, 1) = -1.0;
    } else {
        m(0, 1) = m(1, 0) = 1.0;
    }
    return m;
}

} // namespace

ParityGenerator parity_generator(const fock::LocalBasis& basis) {
    const Eigen::MatrixXd q = basis.project(fock::odd_projector(basis.bare_dim()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q + q.transpose()));
    ParityGenerator g;
    g.vectors = es.eigenvectors();
    g.weights = es.eigenvalues();
    for (Eigen::Index k = 0; k < g.weights.size(); ++k)
        g.classification_residual = std::max(g.classification_residual, std::abs(g.weights(k) - std::round(g.weights(k))));
    return g;
}

Eigen::MatrixXcd parity_step_matrix(const ParityGenerator& gen, double dtheta) {
    Eigen::VectorXcd phases(gen.weights.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::polar(1.0, dtheta * gen.weights(k));
    const Eigen::MatrixXcd v = gen.vectors.cast<complex>();
    return v * phases.asDiagonal() * v.transpose();
}

void incremental_parity_step(mps::ComplexMps& state, std::size_t site, double dtheta, const RotationOptions& opts) {
    if (site >= state.sites()) throw ContractViolation("site out of range");
    const ParityGenerator gen = parity_generator(state.bases[site]);
    if (gen.classification_residual > opts.classification_tol)
        throw NumericalInstability("even/odd classification ambiguous on site", site);
    mps::apply_site_operator(state, site, parity_step_matrix(gen, dtheta));
}

void rotate_all_sites(mps::ComplexMps& state, const mps::ChainModel& model, double theta, SiteSet sites,
                      const RotationOptions& opts) {
    if (state.sites() != model.sites()) throw ContractViolation("state does not match model layout");
    advance(state, steppers(state, model, sites, opts), step_count(theta, opts.dtheta));
}

Eigen::VectorXcd rotate_all_sites(const ed::DenseModel& model, const Eigen::VectorXcd& state, double theta, SiteSet sites,
                                  const RotationOptions& opts) {
    const std::size_t steps = step_count(theta, opts.dtheta);
    const ParityGenerator gen = parity_generator(fock::LocalBasis::bare(model.n_ph));
    const Eigen::MatrixXcd step = parity_step_matrix(gen, opts.dtheta);
    std::vector<std::size_t> targets;
    if (sites != SiteSet::ZBath)
        for (std::size_t i = 0; i < model.chain_x.length(); ++i) targets.push_back(ed::layout_site(model, bath::BathId::X, i));
    if (sites != SiteSet::XBath)
        for (std::size_t i = 0; i < model.chain_z.length(); ++i) targets.push_back(ed::layout_site(model, bath::BathId::Z, i));
    Eigen::VectorXcd v = state;
    for (std::size_t k = 0; k < steps; ++k)
        for (std::size_t site : targets) v = ed::apply_local(model, site, step, v);
    return v;
}

std::vector<std::size_t> boson_sites(const mps::ChainModel& model) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < model.sites(); ++j)
        if (model.is_boson(j)) out.push_back(j);
    return out;
}

OrderParameterReport order_parameter(const mps::ChainModel& model, const mps::ComplexMps& state, const RotationOptions& opts) {
    const complex nrm2 = mps::overlap(state, state);
    const std::size_t spin = model.spin_site();

    mps::ComplexMps rz = state;
    rotate_all_sites(rz, model, std::numbers::pi, SiteSet::XBath, opts);
    mps::apply_site_operator(rz, spin, pauli('z'));
    const complex oz = mps::overlap(state, rz) / nrm2;

    mps::ComplexMps rx = state;
    rotate_all_sites(rx, model, std::numbers::pi, SiteSet::ZBath, opts);
    mps::apply_site_operator(rx, spin, pauli('x'));
    const complex ox = mps::overlap(state, rx) / nrm2;

    OrderParameterReport r = make_order_parameter(oz.real(), ox.real(), std::max(std::abs(oz.imag()), std::abs(ox.imag())));
    const std::vector<std::size_t> sites = boson_sites(model);
    if (!sites.empty()) {
        mps::ComplexMps cal = state;
        rotate_all_sites(cal, model, 2.0 * std::numbers::pi, SiteSet::All, opts);
        const auto before = displacements(state, sites), after = displacements(cal, sites);
        for (std::size_t k = 0; k < sites.size(); ++k)
            r.calibration_deviation = std::max(r.calibration_deviation, std::abs(after[k] - before[k]));
    }
    r.low_confidence = r.calibration_deviation > OrderParameterReport::calibration_tol;
    return r;
}

OrderParameterReport order_parameter(const mps::ChainModel& model, const mps::RealMps& state, const RotationOptions& opts) {
    return order_parameter(model, mps::to_complex(state), opts);
}

OrderParameterReport order_parameter(const ed::DenseModel& model, const Eigen::VectorXcd& state, const RotationOptions& opts) {
    const double nrm2 = state.squaredNorm();
    if (std::abs(nrm2 - 1.0) > 1e-10) throw ContractViolation("state must be normalised");
    const ed::SparseComplex sz = ed::spin_operator(model, ed::Pauli::Z), sx = ed::spin_operator(model, ed::Pauli::X);
    const Eigen::VectorXcd rz = rotate_all_sites(model, state, std::numbers::pi, SiteSet::XBath, opts);
    const Eigen::VectorXcd rx = rotate_all_sites(model, state, std::numbers::pi, SiteSet::ZBath, opts);
    const complex oz = state.dot(sz * rz);
    const complex ox = state.dot(sx * rx);
    OrderParameterReport r = make_order_parameter(oz.real(), ox.real(), std::max(std::abs(oz.imag()), std::abs(ox.imag())));
    const Eigen::VectorXcd cal = rotate_all_sites(model, state, 2.0 * std::numbers::pi, SiteSet::All, opts);
    r.calibration_deviation = (cal - state).cwiseAbs().maxCoeff();
    r.low_confidence = r.calibration_deviation > OrderParameterReport::calibration_tol;
    return r;
}

std::vector<double> theta_grid(std::size_t intervals) {
    if (intervals < 1) throw ContractViolation("theta grid needs at least one interval");
    std::vector<double> t(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) t[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(intervals);
    t.back() = 2.0 * std::numbers::pi;
    return t;
}

RotationScan displacement_rotation_scan(const mps::ChainModel& model, const mps::RealMps& state, const std::vector<double>& thetas,
                                        const std::vector<std::size_t>& tracked, SiteSet rotate, const RotationOptions& opts) {
    if (thetas.size() < 2 || thetas.front() != 0.0) throw ContractViolation("theta grid must start at 0");
    for (std::size_t k = 1; k < thetas.size(); ++k)
        if (!(thetas[k] > thetas[k - 1])) throw ContractViolation("theta grid must be strictly increasing");
    if (std::abs(thetas.back() - 2.0 * std::numbers::pi) > 1e-12) throw ContractViolation("theta grid must end at 2 pi");
    for (std::size_t j : tracked)
        if (j >= model.sites() || !model.is_boson(j)) throw ContractViolation("tracked site must be a boson site");

    RotationScan scan;
    scan.thetas = thetas;
    scan.sites = tracked;
    scan.displacements.resize(static_cast<Eigen::Index>(thetas.size()), static_cast<Eigen::Index>(tracked.size()));
    mps::ComplexMps cur = mps::to_complex(state);
    const auto st = steppers(cur, model, rotate, opts);
    const mps::Mpo h = mps::build_mpo(model, state.bases, 0.0);

    std::size_t done = 0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const std::size_t target = step_count(thetas[k], opts.dtheta);
        advance(cur, st, target - done);
        done = target;
        const auto x = displacements(cur, tracked);
        for (std::size_t i = 0; i < tracked.size(); ++i) scan.displacements(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = x[i];
        scan.energies.push_back(mps::mpo_expectation(cur, h));
    }
    if (!tracked.empty()) {
        const Eigen::Index last = scan.displacements.rows() - 1;
        scan.return_deviation = (scan.displacements.row(last) - scan.displacements.row(0)).cwiseAbs().maxCoeff();
    }
    return scan;
}

void write_rotation_csv(std::ostream& out, const RotationScan& scan) {
    out << "theta,site,X,energy\n";
    for (std::size_t k = 0; k < scan.thetas.size(); ++k)
        for (std::size_t i = 0; i < scan.sites.size(); ++i)
            out << format_double(scan.thetas[k]) << ',' << scan.sites[i] << ','
                << format_double(scan.displacements(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i))) << ','
                << format_double(scan.energies[k]) << '\n';
}

GroupReport verify_group(const ed::DenseModel& model) {
    const std::size_t dim = model.dimension();
    if (dim > (std::size_t{1} << 16)) throw SizeError("group verification limited to dimension 2^16");
    const auto n = static_cast<Eigen::Index>(dim);
    ed::SparseComplex id(n, n);
    id.setIdentity();
    const Eigen::VectorXd px = ed::bath_parity_diagonal(model, bath::BathId::X);
    const Eigen::VectorXd pz = ed::bath_parity_diagonal(model, bath::BathId::Z);
    auto diag = [&](const Eigen::VectorXd& d) {
        ed::SparseComplex m(n, n);
        std::vector<Eigen::Triplet<complex>> t;
        for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), d(i));
        m.setFromTriplets(t.begin(), t.end());
        return m;
    };
    const ed::SparseComplex oz = ed::spin_operator(model, ed::Pauli::Z) * diag(px);
    const ed::SparseComplex ox = ed::spin_operator(model, ed::Pauli::X) * diag(pz);
    const ed::SparseComplex oy = complex(0.0, 1.0) * (ed::spin_operator(model, ed::Pauli::Y) * diag(px.cwiseProduct(pz)));

    GroupReport r;
    r.labels = {"I+", "I-", "Oz+", "Oz-", "Ox+", "Ox-", "Oy+", "Oy-"};
    const std::vector<ed::SparseComplex> el = {id, -id, oz, -oz, ox, -ox, oy, -oy};
    auto max_abs = [](const ed::SparseComplex& m) {
        double v = 0.0;
        for (int k = 0; k < m.outerSize(); ++k)
            for (ed::SparseComplex::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
        return v;
    };
    r.closed = true;
    r.table.assign(el.size(), std::vector<int>(el.size(), -1));
    for (std::size_t i = 0; i < el.size(); ++i)
        for (std::size_t j = 0; j < el.size(); ++j) {
            const ed::SparseComplex prod = el[i] * el[j];
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < el.size(); ++k) {
                const double err = max_abs(ed::SparseComplex(prod - el[k]));
                if (err < best) {
                    best = err;
                    r.table[i][j] = static_cast<int>(k);
                }
            }
            if (best > 1e-12) {
                r.table[i][j] = -1;
                r.closed = false;
            }
            r.max_product_error = std::max(r.max_product_error, best);
        }
    r.oy_identity_error = max_abs(ed::SparseComplex(oy - oz * ox));
    r.anticommutator_error = max_abs(ed::SparseComplex(oz * ox + ox * oz));
    const ed::SparseComplex h = ed::build_sparse_hamiltonian(model).cast<complex>();
    r.commutator_h_oz = max_abs(ed::SparseComplex(h * oz - oz * h));
    r.commutator_h_ox = max_abs(ed::SparseComplex(h * ox - ox * h));
    r.commutator_h_oy = max_abs(ed::SparseComplex(h * oy - oy * h));
    return r;
}

} // namespace tbsbm::symmetry
