#include "tbsbm/ed_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "tbsbm/errors.hpp"
#include "tbsbm/linalg.hpp"
#include "tbsbm/numeric_format.hpp"

namespace tbsbm::ed {

namespace {

using complex = std::complex<double>;

struct Layout {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> strides;
    std::size_t total{1};

    explicit Layout(const DenseModel& m) {
        const std::size_t n = m.sites();
        dims.assign(n, m.n_ph);
        dims[m.spin_site()] = 2;
        strides.assign(n, 1);
        for (std::size_t j = n; j-- > 0;) {
            strides[j] = total;
            total *= dims[j];
        }
    }

    std::size_t digit(std::size_t index, std::size_t site) const { return (index / strides[site]) % dims[site]; }
};

} // namespace

std::size_t DenseModel::dimension() const {
    const std::size_t bosons = chain_z.length() + chain_x.length();
    std::size_t dim = 2;
    for (std::size_t i = 0; i < bosons; ++i) {
        if (dim > dimension_cap / std::max<std::size_t>(n_ph, 1)) throw SizeError("model dimension exceeds cap");
        dim *= n_ph;
    }
    if (dim > dimension_cap) throw SizeError("model dimension exceeds cap");
    return dim;
}

void DenseModel::validate() const {
    chain_z.validate();
    chain_x.validate();
    if (n_ph < 1) throw ContractViolation("n_ph must be at least 1");
    (void)dimension();
}

bath::ChainCoefficients single_mode_chain(double omega, double coupling) {
    bath::ChainCoefficients c;
    c.omegas = {omega};
    c.eta = 4.0 * std::numbers::pi * coupling * coupling;
    return c;
}

std::size_t layout_site(const DenseModel& model, bath::BathId bath, std::size_t index) {
    if (bath == bath::BathId::Z) {
        if (index >= model.chain_z.length()) throw ContractViolation("z site index out of range");
        return model.spin_site() + 1 + index;
    }
    if (index >= model.chain_x.length()) throw ContractViolation("x site index out of range");
    return model.spin_site() - 1 - index;
}

Eigen::SparseMatrix<double> build_sparse_hamiltonian(const DenseModel& model) {
    model.validate();
    const Layout lay(model);
    const std::size_t spin = model.spin_site();
    const std::size_t lz = model.chain_z.length(), lx = model.chain_x.length();
    const double gz = model.chain_z.spin_coupling(), gx = model.chain_x.spin_coupling();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(lay.total * (2 + 2 * (lz + lx)));

    auto sqrtn = [](std::size_t n) { return std::sqrt(static_cast<double>(n)); };

    for (std::size_t idx = 0; idx < lay.total; ++idx) {
        const std::size_t s = lay.digit(idx, spin);
        const double sz = (s == 0) ? 1.0 : -1.0;
        double diag = 0.5 * model.bias * sz;
        for (std::size_t i = 0; i < lz; ++i) diag += model.chain_z.omegas[i] * static_cast<double>(lay.digit(idx, spin + 1 + i));
        for (std::size_t i = 0; i < lx; ++i) diag += model.chain_x.omegas[i] * static_cast<double>(lay.digit(idx, spin - 1 - i));
        if (diag != 0.0) trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), diag);

        // spin couplings to the first site of each chain: g sigma (b + b^dagger)
        if (lz > 0 && gz != 0.0) {
            const std::size_t site = spin + 1;
            const std::size_t n = lay.digit(idx, site);
            if (n > 0) trip.emplace_back(static_cast<int>(idx - lay.strides[site]), static_cast<int>(idx), gz * sz * sqrtn(n));
            if (n + 1 < model.n_ph)
                trip.emplace_back(static_cast<int>(idx + lay.strides[site]), static_cast<int>(idx), gz * sz * sqrtn(n + 1));
        }
        if (lx > 0 && gx != 0.0) {
            const std::size_t site = spin - 1;
            const std::size_t n = lay.digit(idx, site);
            const std::size_t flipped = (s == 0) ? idx + lay.strides[spin] : idx - lay.strides[spin];
            if (n > 0) trip.emplace_back(static_cast<int>(flipped - lay.strides[site]), static_cast<int>(idx), gx * sqrtn(n));
            if (n + 1 < model.n_ph)
                trip.emplace_back(static_cast<int>(flipped + lay.strides[site]), static_cast<int>(idx), gx * sqrtn(n + 1));
        }
        // hopping t_i (b_{i+1}^dagger b_i + h.c.) inside each chain
        auto hop = [&](std::size_t site_i, std::size_t site_j, double t) {
            const std::size_t ni = lay.digit(idx, site_i), nj = lay.digit(idx, site_j);
            if (ni > 0 && nj + 1 < model.n_ph)
                trip.emplace_back(static_cast<int>(idx - lay.strides[site_i] + lay.strides[site_j]), static_cast<int>(idx),
                                  t * sqrtn(ni) * sqrtn(nj + 1));
            if (nj > 0 && ni + 1 < model.n_ph)
                trip.emplace_back(static_cast<int>(idx - lay.strides[site_j] + lay.strides[site_i]), static_cast<int>(idx),
                                  t * sqrtn(nj) * sqrtn(ni + 1));
        };
        for (std::size_t i = 0; i + 1 < lz; ++i) hop(spin + 1 + i, spin + 2 + i, model.chain_z.hops[i]);
        for (std::size_t i = 0; i + 1 < lx; ++i) hop(spin - 1 - i, spin - 2 - i, model.chain_x.hops[i]);
    }
    const auto n = static_cast<Eigen::Index>(lay.total);
    Eigen::SparseMatrix<double> h(n, n);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

Eigen::MatrixXd build_hamiltonian(const DenseModel& model) { return Eigen::MatrixXd(build_sparse_hamiltonian(model)); }

SpectrumResult ground_state(const DenseModel& model, int k, const SolveOptions& opts) {
    if (k < 2) throw ContractViolation("ground_state needs k >= 2");
    const Eigen::SparseMatrix<double> h = build_sparse_hamiltonian(model);
    const Eigen::Index dim = h.rows();
    if (k > dim) throw ContractViolation("k exceeds Hilbert-space dimension");
    SpectrumResult res;
    if (static_cast<std::size_t>(dim) <= opts.dense_limit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
        if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0, 0.0);
        res.energies = es.eigenvalues().head(k);
        res.vectors = es.eigenvectors().leftCols(k);
    } else {
        linalg::EigenSolverOptions eo;
        eo.tolerance = opts.tolerance;
        eo.max_krylov = opts.max_krylov;
        // one guard vector beyond the request keeps degenerate clusters at the edge intact
        const int block = std::min<int>(k + 1, static_cast<int>(dim));
        auto pairs = linalg::lowest_eigenpairs([&](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { out = h * in; },
                                               dim, block, eo);
        if (!pairs.converged)
            throw ConvergenceError("iterative eigensolver did not converge", pairs.values(0), pairs.residuals.maxCoeff());
        res.energies = pairs.values.head(k);
        res.vectors = pairs.vectors.leftCols(k);
    }
    // deterministic sign: largest-magnitude component positive
    for (Eigen::Index c = 0; c < res.vectors.cols(); ++c) {
        Eigen::Index arg;
        res.vectors.col(c).cwiseAbs().maxCoeff(&arg);
        if (res.vectors(arg, c) < 0) res.vectors.col(c) *= -1.0;
    }
    res.degeneracy_gap = res.energies(1) - res.energies(0);
    return res;
}

nlohmann::json to_json(const SpectrumResult& result, const nlohmann::json& params) {
    nlohmann::json j;
    j["energies"] = std::vector<double>(result.energies.data(), result.energies.data() + result.energies.size());
    j["degeneracy_gap"] = result.degeneracy_gap;
    j["params"] = params;
    return j;
}

SparseComplex spin_operator(const DenseModel& model, Pauli which) {
    const Layout lay(model);
    const std::size_t spin = model.spin_site();
    std::vector<Eigen::Triplet<complex>> trip;
    trip.reserve(lay.total);
    for (std::size_t idx = 0; idx < lay.total; ++idx) {
        const std::size_t s = lay.digit(idx, spin);
        const std::size_t flipped = (s == 0) ? idx + lay.strides[spin] : idx - lay.strides[spin];
        const auto col = static_cast<int>(idx);
        switch (which) {
            case Pauli::I: trip.emplace_back(col, col, 1.0); break;
            case Pauli::Z: trip.emplace_back(col, col, s == 0 ? 1.0 : -1.0); break;
            case Pauli::X: trip.emplace_back(static_cast<int>(flipped), col, 1.0); break;
            // sigma^y |up> = i |down>, sigma^y |down> = -i |up>
            case Pauli::Y: trip.emplace_back(static_cast<int>(flipped), col, s == 0 ? complex(0, 1) : complex(0, -1)); break;
        }
    }
    const auto n = static_cast<Eigen::Index>(lay.total);
    SparseComplex op(n, n);
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

Eigen::VectorXd bath_parity_diagonal(const DenseModel& model, bath::BathId bath) {
    const Layout lay(model);
    const std::size_t len = bath == bath::BathId::Z ? model.chain_z.length() : model.chain_x.length();
    Eigen::VectorXd d(static_cast<Eigen::Index>(lay.total));
    for (std::size_t idx = 0; idx < lay.total; ++idx) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < len; ++i) n += lay.digit(idx, layout_site(model, bath, i));
        d(static_cast<Eigen::Index>(idx)) = (n % 2 == 0) ? 1.0 : -1.0;
    }
    return d;
}

Eigen::VectorXcd apply_local(const DenseModel& model, std::size_t site, const Eigen::MatrixXcd& op,
                             const Eigen::VectorXcd& state) {
    const Layout lay(model);
    if (site >= lay.dims.size()) throw ContractViolation("site out of range");
    const std::size_t d = lay.dims[site];
    if (static_cast<std::size_t>(op.rows()) != d || static_cast<std::size_t>(op.cols()) != d)
        throw ContractViolation("local operator has wrong dimension");
    if (static_cast<std::size_t>(state.size()) != lay.total) throw ContractViolation("state has wrong dimension");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(state.size());
    const std::size_t stride = lay.strides[site];
    for (std::size_t idx = 0; idx < lay.total; ++idx) {
        const std::size_t n = lay.digit(idx, site);
        if (n != 0) continue;  // visit each fibre once through its n = 0 member
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const complex v = op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                if (v != complex(0.0)) out(static_cast<Eigen::Index>(idx + a * stride)) += v * state(static_cast<Eigen::Index>(idx + b * stride));
            }
    }
    return out;
}

ObservableReport dense_observables(const DenseModel& model, const Eigen::VectorXcd& state) {
    const double norm2 = state.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-10) throw ContractViolation("dense state must be normalised");
    ObservableReport r;
    const Eigen::SparseMatrix<double> h = build_sparse_hamiltonian(model);
    const Eigen::VectorXcd hs = h.cast<complex>() * state;
    r.energy = state.dot(hs).real();
    const SparseComplex sz = spin_operator(model, Pauli::Z), sx = spin_operator(model, Pauli::X);
    r.sigma_z = state.dot(sz * state).real();
    r.sigma_x = state.dot(sx * state).real();
    Eigen::MatrixXcd pos = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(model.n_ph), static_cast<Eigen::Index>(model.n_ph));
    for (Eigen::Index n = 1; n < pos.rows(); ++n) pos(n - 1, n) = pos(n, n - 1) = std::sqrt(static_cast<double>(n) / 2.0);
    for (std::size_t i = 0; i < model.chain_x.length(); ++i)
        r.x_displacements.push_back(state.dot(apply_local(model, layout_site(model, bath::BathId::X, i), pos, state)).real());
    for (std::size_t i = 0; i < model.chain_z.length(); ++i)
        r.z_displacements.push_back(state.dot(apply_local(model, layout_site(model, bath::BathId::Z, i), pos, state)).real());
    const Eigen::VectorXd px = bath_parity_diagonal(model, bath::BathId::X);
    const Eigen::VectorXd pz = bath_parity_diagonal(model, bath::BathId::Z);
    const complex oz = state.dot(sz * (px.cast<complex>().asDiagonal() * state));
    const complex ox = state.dot(sx * (pz.cast<complex>().asDiagonal() * state));
    r.order = make_order_parameter(oz.real(), ox.real(), std::max(std::abs(oz.imag()), std::abs(ox.imag())));
    return r;
}

ObservableReport dense_observables(const DenseModel& model, const Eigen::VectorXd& state) {
    return dense_observables(model, Eigen::VectorXcd(state.cast<complex>()));
}

PopulationGrid PopulationGrid::uniform(double x_min, double x_max, std::size_t nx, double z_min, double z_max,
                                       std::size_t nz) {
    if (nx < 2 || nz < 2) throw ContractViolation("population grid needs at least 2 points per axis");
    PopulationGrid g;
    for (std::size_t i = 0; i < nx; ++i)
        g.xs.push_back(x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1));
    for (std::size_t i = 0; i < nz; ++i)
        g.zs.push_back(z_min + (z_max - z_min) * static_cast<double>(i) / static_cast<double>(nz - 1));
    return g;
}

double PopulationField::centroid_distance() const { return std::hypot(centroid_x, centroid_z); }

Eigen::MatrixXd hermite_functions(std::size_t n_max, const std::vector<double>& xs) {
    const auto n = static_cast<Eigen::Index>(n_max);
    Eigen::MatrixXd phi(n, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double x = xs[k];
        const auto col = static_cast<Eigen::Index>(k);
        phi(0, col) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
        if (n > 1) phi(1, col) = std::numbers::sqrt2 * x * phi(0, col);
        for (Eigen::Index m = 1; m + 1 < n; ++m) {
            const double md = static_cast<double>(m);
            phi(m + 1, col) = std::sqrt(2.0 / (md + 1.0)) * x * phi(m, col) - std::sqrt(md / (md + 1.0)) * phi(m - 1, col);
        }
    }
    return phi;
}

void finalize_population(PopulationField& f) {
    auto weights = [](const std::vector<double>& g) {
        std::vector<double> w(g.size(), 0.0);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            const double h = 0.5 * (g[i + 1] - g[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        return w;
    };
    const auto wx = weights(f.xs), wz = weights(f.zs);
    double total = 0.0, mx = 0.0, mz = 0.0;
    for (std::size_t iz = 0; iz < f.zs.size(); ++iz)
        for (std::size_t ix = 0; ix < f.xs.size(); ++ix) {
            const double p = f.values(static_cast<Eigen::Index>(iz), static_cast<Eigen::Index>(ix)) * wx[ix] * wz[iz];
            total += p;
            mx += p * f.xs[ix];
            mz += p * f.zs[iz];
        }
    f.integral = total;
    f.centroid_x = total > 0 ? mx / total : 0.0;
    f.centroid_z = total > 0 ? mz / total : 0.0;
    f.normalization_warning = std::abs(total - 1.0) > 0.01;
}

PopulationField single_mode_population(const DenseModel& model, const Eigen::VectorXcd& state, const PopulationGrid& grid) {
    if (model.chain_z.length() != 1 || model.chain_x.length() != 1)
        throw ContractViolation("phonon population needs exactly one mode per bath");
    if (static_cast<std::size_t>(state.size()) != model.dimension()) throw ContractViolation("state has wrong dimension");
    const auto n = static_cast<Eigen::Index>(model.n_ph);
    const Eigen::MatrixXd phx = hermite_functions(model.n_ph, grid.xs);
    const Eigen::MatrixXd phz = hermite_functions(model.n_ph, grid.zs);
    PopulationField f;
    f.xs = grid.xs;
    f.zs = grid.zs;
    f.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.zs.size()), static_cast<Eigen::Index>(grid.xs.size()));
    // layout x0, spin, z0: index = (nx * 2 + s) * n + nz
    for (Eigen::Index s = 0; s < 2; ++s) {
        Eigen::MatrixXcd c(n, n);  // c(nx, nz)
        for (Eigen::Index nx = 0; nx < n; ++nx)
            for (Eigen::Index nz = 0; nz < n; ++nz) c(nx, nz) = state((nx * 2 + s) * n + nz);
        const Eigen::MatrixXcd psi = phz.transpose().cast<std::complex<double>>() * c.transpose() *
                                     phx.cast<std::complex<double>>();  // (iz, ix)
        f.values += psi.cwiseAbs2();
    }
    finalize_population(f);
    return f;
}

void write_population_csv(std::ostream& out, const PopulationField& f) {
    out << "x,z,p\n";
    for (std::size_t iz = 0; iz < f.zs.size(); ++iz)
        for (std::size_t ix = 0; ix < f.xs.size(); ++ix)
            out << format_double(f.xs[ix]) << ',' << format_double(f.zs[iz]) << ','
                << format_double(f.values(static_cast<Eigen::Index>(iz), static_cast<Eigen::Index>(ix))) << '\n';
}

} // namespace tbsbm::ed
