#include "tbsbm/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <mutex>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>
#include <glog/logging.h>

#include "tbsbm/errors.hpp"

namespace tbsbm::variational {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// S_mn = <f_m|g_n> for coherent products given row-wise.
MatrixXcd overlap_matrix(const MatrixXcd& f, const MatrixXcd& g) {
    const Eigen::VectorXd nf = f.rowwise().squaredNorm(), ng = g.rowwise().squaredNorm();
    MatrixXcd l = f.conjugate() * g.transpose();
    for (Eigen::Index m = 0; m < l.rows(); ++m)
        for (Eigen::Index n = 0; n < l.cols(); ++n) l(m, n) = std::exp(l(m, n) - 0.5 * nf(m) - 0.5 * ng(n));
    return l;
}

struct Blocks {
    MatrixXcd sff, sgg, sfg;
    MatrixXcd hff, hgg, hfg;
    Eigen::VectorXd lz, lx;  // lambda / 2 on the z (x) slots, zero elsewhere

    MatrixXcd h() const {
        const Eigen::Index n = sff.rows();
        MatrixXcd m(2 * n, 2 * n);
        m << hff, hfg, hfg.adjoint(), hgg;
        return m;
    }
    MatrixXcd s() const {
        const Eigen::Index n = sff.rows();
        // the spin states are orthogonal, so S is block diagonal
        MatrixXcd m = MatrixXcd::Zero(2 * n, 2 * n);
        m.topLeftCorner(n, n) = sff;
        m.bottomRightCorner(n, n) = sgg;
        return m;
    }
};

Blocks blocks(const VariationalState& st, const ModeGrid& grid) {
    Blocks b;
    const auto total = static_cast<Eigen::Index>(grid.total_modes());
    const auto mz = static_cast<Eigen::Index>(grid.modes_per_bath);
    b.lz = Eigen::VectorXd::Zero(total);
    b.lx = Eigen::VectorXd::Zero(total);
    b.lz.head(mz) = 0.5 * grid.lambdas.head(mz);
    b.lx.tail(total - mz) = 0.5 * grid.lambdas.tail(total - mz);
    const VectorXcd lz = b.lz.cast<complex>(), lx = b.lx.cast<complex>();
    const Eigen::Index n = st.a.size();
    const VectorXcd ones = VectorXcd::Ones(n);

    b.sff = overlap_matrix(st.f, st.f);
    b.sgg = overlap_matrix(st.g, st.g);
    b.sfg = overlap_matrix(st.f, st.g);
    const MatrixXcd w = grid.omegas.cast<complex>().asDiagonal();
    const complex half_bias(0.5 * grid.bias, 0.0);

    const VectorXcd fz_bra = st.f.conjugate() * lz, fz_ket = st.f * lz;
    const VectorXcd gz_bra = st.g.conjugate() * lz, gz_ket = st.g * lz;
    const VectorXcd fx_bra = st.f.conjugate() * lx, gx_ket = st.g * lx;

    MatrixXcd eff = st.f.conjugate() * w * st.f.transpose() + fz_bra * ones.transpose() + ones * fz_ket.transpose();
    eff.array() += half_bias;
    MatrixXcd egg = st.g.conjugate() * w * st.g.transpose() - gz_bra * ones.transpose() - ones * gz_ket.transpose();
    egg.array() -= half_bias;
    const MatrixXcd efg = fx_bra * ones.transpose() + ones * gx_ket.transpose();
    b.hff = b.sff.cwiseProduct(eff);
    b.hgg = b.sgg.cwiseProduct(egg);
    b.hfg = b.sfg.cwiseProduct(efg);
    return b;
}

VectorXcd weights(const VariationalState& st) {
    VectorXcd c(2 * st.a.size());
    c << st.a, st.b;
    return c;
}

double real_energy(const VectorXcd& c, const MatrixXcd& h) { return c.dot(h * c).real(); }

struct Gradient {
    double energy{0.0};
    double norm{0.0};
    Eigen::VectorXd grad;  // d<H>/dxi - E d<D>/dxi
};

Gradient gradient(const VariationalState& st, const ModeGrid& grid) {
    const Blocks b = blocks(st, grid);
    const MatrixXcd h = b.h(), s = b.s();
    const VectorXcd c = weights(st);
    Gradient out;
    out.norm = c.dot(s * c).real();
    if (!(out.norm >= 1e-14)) throw NumericalInstability("variational state has vanishing norm", 0);
    out.energy = real_energy(c, h) / out.norm;
    const MatrixXcd k = h - out.energy * s;
    const VectorXcd r = k * c;
    const Eigen::Index n = st.a.size();
    const auto total = static_cast<Eigen::Index>(st.total_modes());

    const MatrixXcd af = st.a.asDiagonal() * st.f;  // a_n f_nl
    const MatrixXcd bg = st.b.asDiagonal() * st.g;
    const MatrixXcd kpp = k.topLeftCorner(n, n), kpm = k.topRightCorner(n, n);
    const MatrixXcd kmp = k.bottomLeftCorner(n, n), kmm = k.bottomRightCorner(n, n);
    const MatrixXcd w = grid.omegas.cast<complex>().asDiagonal();
    const VectorXcd sff_a = b.sff * st.a, sgg_b = b.sgg * st.b, sfg_b = b.sfg * st.b, sgf_a = b.sfg.adjoint() * st.a;

    MatrixXcd t = kpp * af + kpm * bg + b.sff * af * w;
    t += sff_a * b.lz.cast<complex>().transpose() + sfg_b * b.lx.cast<complex>().transpose();
    MatrixXcd u = kmp * af + kmm * bg + b.sgg * bg * w;
    u += -sgg_b * b.lz.cast<complex>().transpose() + sgf_a * b.lx.cast<complex>().transpose();

    MatrixXcd wf(n, total), wg(n, total);
    for (Eigen::Index m = 0; m < n; ++m) {
        const complex rp = r(m), rm = r(n + m);
        for (Eigen::Index l = 0; l < total; ++l) {
            const complex fml = st.f(m, l), gml = st.g(m, l);
            wf(m, l) = std::conj(st.a(m)) * (t(m, l) - 0.5 * fml * rp) - 0.5 * fml * st.a(m) * std::conj(rp);
            wg(m, l) = std::conj(st.b(m)) * (u(m, l) - 0.5 * gml * rm) - 0.5 * gml * st.b(m) * std::conj(rm);
        }
    }
    VariationalState d;
    d.a = 2.0 * r.head(n);
    d.b = 2.0 * r.tail(n);
    d.f = 2.0 * wf;
    d.g = 2.0 * wg;
    out.grad = pack(d);
    return out;
}

VariationalState normalized(const VariationalState& st, const ModeGrid& grid) {
    const EnergyNorm en = energy_and_norm(st, grid);
    VariationalState s = st;
    const double scale = 1.0 / std::sqrt(en.norm);
    s.a *= scale;
    s.b *= scale;
    return s;
}

double max_residual(const VariationalState& st, const ModeGrid& grid) {
    return gradient(normalized(st, grid), grid).grad.cwiseAbs().maxCoeff();
}

class EnergyFunction final : public ceres::FirstOrderFunction {
public:
    EnergyFunction(const ModeGrid& grid, std::size_t terms, std::size_t modes) : grid_(grid), terms_(terms), modes_(modes) {}

    bool Evaluate(const double* parameters, double* cost, double* grad) const override {
        const Eigen::Map<const Eigen::VectorXd> p(parameters, NumParameters());
        const VariationalState st = unpack(p, terms_, modes_);
        try {
            const Gradient g = gradient(st, grid_);
            *cost = g.energy;
            if (grad) Eigen::Map<Eigen::VectorXd>(grad, NumParameters()) = g.grad / g.norm;
        } catch (const NumericalInstability&) {
            return false;
        }
        return true;
    }

    int NumParameters() const override { return static_cast<int>(4 * terms_ + 4 * terms_ * modes_); }

private:
    const ModeGrid& grid_;
    std::size_t terms_, modes_;
};

// Damped self-consistency sweeps on the displacements with optimal weights.
VariationalState fixed_point(VariationalState st, const ModeGrid& grid, const RelaxSchedule& sch) {
    st = solve_weights(st, grid);
    double energy = energy_and_norm(st, grid).energy;
    double kappa = sch.damping;
    const Eigen::Index n = st.a.size();
    const auto total = static_cast<Eigen::Index>(st.total_modes());
    for (int it = 0; it < sch.fixed_point_iterations && kappa > 1e-3; ++it) {
        const Blocks b = blocks(st, grid);
        const MatrixXcd s = b.s();
        const MatrixXcd k = b.h() - energy * s;
        const VectorXcd c = weights(st);
        const VectorXcd sff_a = b.sff * st.a, sgg_b = b.sgg * st.b, sfg_b = b.sfg * st.b, sgf_a = b.sfg.adjoint() * st.a;
        MatrixXcd fn = st.f, gn = st.g;
        for (Eigen::Index l = 0; l < total; ++l) {
            const MatrixXcd sys = c.conjugate().asDiagonal() * (k + grid.omegas(l) * s) * c.asDiagonal();
            VectorXcd v(2 * n);
            if (l < static_cast<Eigen::Index>(grid.modes_per_bath))
                v << b.lz(l) * sff_a, -b.lz(l) * sgg_b;
            else
                v << b.lx(l) * sfg_b, b.lx(l) * sgf_a;
            const VectorXcd rhs = -(c.conjugate().asDiagonal() * v);
            const VectorXcd x = sys.completeOrthogonalDecomposition().solve(rhs);
            if (!x.allFinite()) continue;
            fn.col(l) = x.head(n);
            gn.col(l) = x.tail(n);
        }
        VariationalState trial = st;
        trial.f = (1.0 - kappa) * st.f + kappa * fn;
        trial.g = (1.0 - kappa) * st.g + kappa * gn;
        try {
            trial = solve_weights(trial, grid);
        } catch (const NumericalInstability&) {
            kappa *= 0.5;
            continue;
        }
        const double e = energy_and_norm(trial, grid).energy;
        if (e < energy) {
            const bool stalled = energy - e <= 1e-15 * std::max(1.0, std::abs(e));
            st = std::move(trial);
            energy = e;
            if (stalled) break;
        } else {
            kappa *= 0.5;
        }
    }
    return st;
}

VariationalState polish(const VariationalState& st, const ModeGrid& grid, const RelaxSchedule& sch) {
    static std::once_flag quiet;
    // the line search warns on flat cubic fits, which is routine this close to a minimum
    std::call_once(quiet, [] { FLAGS_minloglevel = google::GLOG_ERROR; });
    Eigen::VectorXd p = pack(normalized(st, grid));
    ceres::GradientProblem problem(new EnergyFunction(grid, st.terms(), st.total_modes()));
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.max_num_iterations = sch.max_polish_iterations;
    opts.function_tolerance = 0.0;
    opts.gradient_tolerance = 0.1 * sch.residual_tol;
    opts.parameter_tolerance = 0.0;
    opts.logging_type = ceres::SILENT;
    opts.minimizer_progress_to_stdout = false;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opts, problem, p.data(), &summary);
    return normalized(unpack(p, st.terms(), st.total_modes()), grid);
}

// Newton iteration on the energy gradient with a central-difference Hessian, pseudo-inverted by |eigenvalue|
// so gauge directions (global scale and phase) drop out.
VariationalState newton_refine(const VariationalState& start, const ModeGrid& grid, int steps, double tol) {
    VariationalState st = normalized(start, grid);
    const std::size_t n = st.terms(), modes = st.total_modes();
    auto grad = [&](const Eigen::VectorXd& p) {
        const Gradient g = gradient(unpack(p, n, modes), grid);
        return Eigen::VectorXd(g.grad / g.norm);
    };
    double res = max_residual(st, grid);
    double energy = energy_and_norm(st, grid).energy;
    for (int it = 0; it < steps && res > tol; ++it) {
        const Eigen::VectorXd p = pack(st);
        const Eigen::VectorXd g0 = grad(p);
        const Eigen::Index dim = p.size();
        Eigen::MatrixXd hess(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(p(i)));
            Eigen::VectorXd pp = p, pm = p;
            pp(i) += h;
            pm(i) -= h;
            hess.col(i) = (grad(pp) - grad(pm)) / (2.0 * h);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hess + hess.transpose()));
        const double top = es.eigenvalues().cwiseAbs().maxCoeff();
        Eigen::VectorXd proj = es.eigenvectors().transpose() * g0;
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double lam = std::abs(es.eigenvalues()(k));
            proj(k) = lam > 1e-9 * top ? proj(k) / lam : 0.0;
        }
        const Eigen::VectorXd step = -(es.eigenvectors() * proj);
        bool accepted = false;
        for (double scale = 1.0; scale > 1e-3; scale *= 0.5) {
            VariationalState trial;
            try {
                trial = normalized(unpack(p + scale * step, n, modes), grid);
            } catch (const NumericalInstability&) {
                continue;
            }
            const double r = max_residual(trial, grid);
            const double e = energy_and_norm(trial, grid).energy;
            if (r < res && e <= energy + 1e-13 * std::max(1.0, std::abs(energy))) {
                st = std::move(trial);
                res = r;
                energy = std::min(energy, e);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return st;
}

RelaxResult relax_one(const VariationalState& start, const ModeGrid& grid, const RelaxSchedule& sch) {
    const double e0 = energy_and_norm(start, grid).energy;
    VariationalState st = start;
    double last = e0;
    // the polish stalls on nearly dependent terms; re-solving the weights and iterating again unsticks it
    for (int cycle = 0; cycle < 8; ++cycle) {
        st = fixed_point(st, grid, sch);
        st = solve_weights(polish(st, grid, sch), grid);
        const double e = energy_and_norm(st, grid).energy;
        const double res = max_residual(st, grid);
        if (res <= sch.residual_tol || last - e <= 1e-14 * std::max(1.0, std::abs(e))) break;
        last = e;
    }
    RelaxResult r;
    r.energy = energy_and_norm(st, grid).energy;
    r.state = normalized(st, grid);
    if (r.energy > e0) {
        // never hand back something worse than the input
        r.state = normalized(start, grid);
        r.energy = e0;
    }
    r.residual = max_residual(r.state, grid);
    r.converged = r.residual <= sch.residual_tol;
    return r;
}

double sign_fix(VariationalState& st) {
    // global phase: largest weight real positive
    VectorXcd c = weights(st);
    Eigen::Index arg;
    c.cwiseAbs().maxCoeff(&arg);
    if (std::abs(c(arg)) == 0.0) return 0.0;
    const complex ph = std::conj(c(arg)) / std::abs(c(arg));
    st.a *= ph;
    st.b *= ph;
    return std::arg(ph);
}

// <x | f> for unit frequency.
complex coherent_wavefunction(complex f, double x) {
    const double x0 = std::numbers::sqrt2 * f.real(), p0 = std::numbers::sqrt2 * f.imag();
    const double amp = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * (x - x0) * (x - x0));
    return std::polar(amp, p0 * x - 0.5 * x0 * p0);
}

} // namespace

bool ModeGrid::paired(double tol) const {
    const auto m = static_cast<Eigen::Index>(modes_per_bath);
    if (omegas.size() != 2 * m) return false;
    for (Eigen::Index l = 0; l < m; ++l)
        if (std::abs(omegas(l) - omegas(l + m)) > tol * std::max(1.0, std::abs(omegas(l)))) return false;
    return true;
}

void ModeGrid::validate() const {
    if (omegas.size() != static_cast<Eigen::Index>(2 * modes_per_bath) || lambdas.size() != omegas.size())
        throw SizeError("mode grid needs 2M frequencies and couplings");
    if (modes_per_bath == 0) throw SizeError("mode grid needs at least one mode per bath");
    if ((omegas.array() <= 0.0).any()) throw DomainError("mode frequencies must be positive");
    if ((lambdas.array() < 0.0).any()) throw DomainError("mode couplings must be non-negative");
}

ModeGrid discretize_baths(const bath::BathSpec& z, const bath::BathSpec& x, const ModeGridOptions& opts) {
    z.validate();
    x.validate();
    if (opts.modes < 1) throw ContractViolation("need at least one mode per bath");
    if (!(opts.lower > 0.0 && opts.upper > opts.lower)) throw ContractViolation("mode window must satisfy 0 < lower < upper");
    ModeGrid grid;
    grid.modes_per_bath = opts.modes;
    const auto m = static_cast<Eigen::Index>(opts.modes);
    grid.omegas.resize(2 * m);
    grid.lambdas.resize(2 * m);
    using boost::math::quadrature::gauss;
    int which = 0;
    for (const bath::BathSpec* spec : {&z, &x}) {
        const double wc = spec->omega_c;
        // the shape of J is alpha independent; integrate the alpha = 1 profile and rescale
        bath::BathSpec unit = *spec;
        unit.alpha = 1.0;
        for (Eigen::Index l = 0; l < m; ++l) {
            const double lo = opts.lower * wc * std::pow(opts.upper / opts.lower, static_cast<double>(l) / static_cast<double>(m));
            const double hi = opts.lower * wc * std::pow(opts.upper / opts.lower, static_cast<double>(l + 1) / static_cast<double>(m));
            // in u = ln w the integrands are analytic across a bin, so fixed Gauss-Legendre is exact to round-off
            auto j = [&](double u) {
                const double w = std::exp(u);
                return w * bath::spectral_density(unit, w);
            };
            auto wj = [&](double u) {
                const double w = std::exp(u);
                return w * w * bath::spectral_density(unit, w);
            };
            const double mass = gauss<double, 30>::integrate(j, std::log(lo), std::log(hi));
            const double first = gauss<double, 30>::integrate(wj, std::log(lo), std::log(hi));
            const Eigen::Index idx = which * m + l;
            grid.omegas(idx) = first / mass;
            grid.lambdas(idx) = std::sqrt(spec->alpha * mass / std::numbers::pi);
        }
        ++which;
    }
    return grid;
}

std::pair<double, double> discretization_check(const ModeGrid& grid, const bath::BathSpec& spec) {
    const auto m = static_cast<Eigen::Index>(grid.modes_per_bath);
    const Eigen::VectorXd l = spec.bath_id == bath::BathId::Z ? Eigen::VectorXd(grid.lambdas.head(m)) : Eigen::VectorXd(grid.lambdas.tail(m));
    return {std::numbers::pi * l.squaredNorm(), bath::renormalized_coupling(spec, bath::EtaLimit::Infinity)};
}

ModeGrid single_mode_grid(double omega, double lambda_z, double lambda_x, double bias) {
    ModeGrid g;
    g.modes_per_bath = 1;
    g.omegas = Eigen::Vector2d(omega, omega);
    g.lambdas = Eigen::Vector2d(lambda_z, lambda_x);
    g.bias = bias;
    g.validate();
    return g;
}

void VariationalState::validate(const ModeGrid& grid) const {
    grid.validate();
    if (a.size() == 0 || b.size() != a.size()) throw SizeError("weight vectors must be non-empty and of equal length");
    if (f.rows() != a.size() || g.rows() != a.size()) throw SizeError("displacement tables need one row per term");
    if (f.cols() != grid.omegas.size() || g.cols() != grid.omegas.size()) throw SizeError("displacement tables need 2M columns");
}

EnergyNorm energy_and_norm(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    const Blocks b = blocks(st, grid);
    const VectorXcd c = weights(st);
    EnergyNorm en;
    en.norm = c.dot(b.s() * c).real();
    if (!(en.norm >= 1e-14)) throw NumericalInstability("variational state has vanishing norm", 0);
    en.energy = real_energy(c, b.h()) / en.norm;
    return en;
}

Eigen::VectorXd pack(const VariationalState& st) {
    const Eigen::Index n = st.a.size(), total = st.f.cols();
    Eigen::VectorXd p(4 * n + 4 * n * total);
    Eigen::Index k = 0;
    for (const VectorXcd* v : {&st.a, &st.b}) {
        for (Eigen::Index i = 0; i < n; ++i) p(k++) = (*v)(i).real();
        for (Eigen::Index i = 0; i < n; ++i) p(k++) = (*v)(i).imag();
    }
    for (const MatrixXcd* m : {&st.f, &st.g}) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index l = 0; l < total; ++l) p(k++) = (*m)(i, l).real();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index l = 0; l < total; ++l) p(k++) = (*m)(i, l).imag();
    }
    return p;
}

VariationalState unpack(const Eigen::VectorXd& p, std::size_t terms, std::size_t total_modes) {
    const auto n = static_cast<Eigen::Index>(terms), total = static_cast<Eigen::Index>(total_modes);
    if (p.size() != 4 * n + 4 * n * total) throw SizeError("parameter vector has wrong length");
    VariationalState st;
    st.a.resize(n);
    st.b.resize(n);
    st.f.resize(n, total);
    st.g.resize(n, total);
    Eigen::Index k = 0;
    for (VectorXcd* v : {&st.a, &st.b}) {
        for (Eigen::Index i = 0; i < n; ++i) (*v)(i) = p(k++);
        for (Eigen::Index i = 0; i < n; ++i) (*v)(i) += complex(0.0, p(k++));
    }
    for (MatrixXcd* m : {&st.f, &st.g}) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index l = 0; l < total; ++l) (*m)(i, l) = p(k++);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index l = 0; l < total; ++l) (*m)(i, l) += complex(0.0, p(k++));
    }
    return st;
}

Eigen::VectorXd residual(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    return gradient(st, grid).grad;
}

double shifted_functional(const VariationalState& st, const ModeGrid& grid, double energy) {
    st.validate(grid);
    const Blocks b = blocks(st, grid);
    const VectorXcd c = weights(st);
    return real_energy(c, b.h()) - energy * c.dot(b.s() * c).real();
}

VariationalState solve_weights(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    const Blocks b = blocks(st, grid);
    const MatrixXcd s = b.s(), h = b.h();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (s + s.adjoint()));
    const double smax = es.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > 1e-12 * smax) keep.push_back(k);
    if (keep.empty()) throw NumericalInstability("overlap matrix is singular", 0);
    MatrixXcd x(s.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        x.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]) / std::sqrt(es.eigenvalues()(keep[k]));
    const MatrixXcd hr = x.adjoint() * h * x;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> hs(0.5 * (hr + hr.adjoint()));
    const VectorXcd c = x * hs.eigenvectors().col(0);
    VariationalState out = st;
    out.a = c.head(st.a.size());
    out.b = c.tail(st.b.size());
    sign_fix(out);
    return out;
}

VariationalState random_state(const ModeGrid& grid, std::size_t terms, std::uint64_t seed, double scale) {
    grid.validate();
    if (terms < 1) throw ContractViolation("need at least one term");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const auto n = static_cast<Eigen::Index>(terms);
    const auto total = static_cast<Eigen::Index>(grid.total_modes());
    VariationalState st;
    st.a.resize(n);
    st.b.resize(n);
    st.f.resize(n, total);
    st.g.resize(n, total);
    for (Eigen::Index i = 0; i < n; ++i) {
        st.a(i) = complex(gauss(rng), 0.1 * gauss(rng));
        st.b(i) = complex(gauss(rng), 0.1 * gauss(rng));
        for (Eigen::Index l = 0; l < total; ++l) {
            const double classical = 0.5 * grid.lambdas(l) / grid.omegas(l);
            st.f(i, l) = complex(scale * classical * gauss(rng), 0.1 * scale * classical * gauss(rng));
            st.g(i, l) = complex(scale * classical * gauss(rng), 0.1 * scale * classical * gauss(rng));
        }
    }
    return st;
}

VariationalState embed(const VariationalState& st, std::size_t terms, std::uint64_t seed) {
    const auto n0 = static_cast<Eigen::Index>(st.terms());
    const auto n = static_cast<Eigen::Index>(terms);
    if (n < n0) throw ContractViolation("embedding cannot drop terms");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    VariationalState out;
    out.a = VectorXcd::Zero(n);
    out.b = VectorXcd::Zero(n);
    out.f.resize(n, st.f.cols());
    out.g.resize(n, st.g.cols());
    out.a.head(n0) = st.a;
    out.b.head(n0) = st.b;
    out.f.topRows(n0) = st.f;
    out.g.topRows(n0) = st.g;
    for (Eigen::Index i = n0; i < n; ++i) {
        // new terms start near an existing one so the optimizer can split it
        const Eigen::Index src = (i - n0) % n0;
        for (Eigen::Index l = 0; l < st.f.cols(); ++l) {
            out.f(i, l) = st.f(src, l) + complex(0.05 * gauss(rng), 0.0);
            out.g(i, l) = st.g(src, l) + complex(0.05 * gauss(rng), 0.0);
        }
    }
    return out;
}

RelaxResult relax(const VariationalState& state, const ModeGrid& grid, const RelaxSchedule& sch) {
    state.validate(grid);
    if (sch.restarts < 1) throw ContractViolation("need at least one trajectory");
    if (!(sch.damping > 0.0 && sch.damping <= 1.0)) throw ContractViolation("damping must lie in (0, 1]");
    RelaxResult best = relax_one(state, grid, sch);
    for (int k = 1; k < sch.restarts; ++k) {
        const VariationalState start = random_state(grid, state.terms(), sch.seed + static_cast<std::uint64_t>(k), sch.seed_scale);
        RelaxResult r;
        try {
            r = relax_one(start, grid, sch);
        } catch (const NumericalInstability&) {
            continue;
        }
        if (r.energy < best.energy) best = std::move(r);
    }
    if (!best.converged && sch.newton_steps > 0) {
        best.state = newton_refine(best.state, grid, sch.newton_steps, sch.residual_tol);
        best.energy = energy_and_norm(best.state, grid).energy;
        best.residual = max_residual(best.state, grid);
        best.converged = best.residual <= sch.residual_tol;
    }
    return best;
}

VariationalState rotate(const VariationalState& st, const ModeGrid& grid, double theta) {
    st.validate(grid);
    if (!grid.paired()) throw SizeError("rotation needs mode-by-mode paired z and x grids");
    const auto m = static_cast<Eigen::Index>(grid.modes_per_bath);
    const double c = std::cos(theta), s = std::sin(theta);
    auto boson = [&](const MatrixXcd& d) {
        MatrixXcd r = d;
        for (Eigen::Index l = 0; l < m; ++l) {
            r.col(l) = c * d.col(l) + s * d.col(l + m);
            r.col(l + m) = -s * d.col(l) + c * d.col(l + m);
        }
        return r;
    };
    const MatrixXcd fr = boson(st.f), gr = boson(st.g);
    const double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
    const Eigen::Index n = st.a.size();
    VariationalState out;
    out.a.resize(2 * n);
    out.b.resize(2 * n);
    out.f.resize(2 * n, st.f.cols());
    out.g.resize(2 * n, st.f.cols());
    // exp(i theta sigma^y / 2): |+> -> c|+> - s|->, |-> -> s|+> + c|->
    out.a << ch * st.a, sh * st.b;
    out.f << fr, gr;
    out.b << -sh * st.a, ch * st.b;
    out.g << fr, gr;
    return out;
}

VariationalState compress(const VariationalState& st, std::size_t terms) {
    const auto n = static_cast<Eigen::Index>(terms);
    if (n < 1) throw ContractViolation("need at least one term");
    if (n >= st.a.size()) return st;
    auto top = [&](const VectorXcd& w) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(w.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) { return std::abs(w(x)) > std::abs(w(y)); });
        idx.resize(terms);
        std::sort(idx.begin(), idx.end());
        return idx;
    };
    const auto ia = top(st.a), ib = top(st.b);
    VariationalState out;
    out.a.resize(n);
    out.b.resize(n);
    out.f.resize(n, st.f.cols());
    out.g.resize(n, st.g.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
        out.a(k) = st.a(ia[static_cast<std::size_t>(k)]);
        out.f.row(k) = st.f.row(ia[static_cast<std::size_t>(k)]);
        out.b(k) = st.b(ib[static_cast<std::size_t>(k)]);
        out.g.row(k) = st.g.row(ib[static_cast<std::size_t>(k)]);
    }
    return out;
}

RotationalResult rotational_optimization(const VariationalState& state, const ModeGrid& grid, const std::vector<double>& thetas,
                                         const RelaxSchedule& schedule) {
    if (thetas.empty()) throw ContractViolation("rotation grid is empty");
    RotationalResult out;
    bool have = false;
    for (double theta : thetas) {
        const VariationalState start = compress(rotate(state, grid, theta), state.terms());
        RelaxResult r;
        try {
            r = relax(start, grid, schedule);
        } catch (const NumericalInstability&) {
            out.energies.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        out.energies.push_back(r.energy);
        if (!have || r.energy < out.best.energy - 1e-12 * std::max(1.0, std::abs(r.energy))) {
            out.best = std::move(r);
            out.theta = theta;
            have = true;
        }
    }
    if (!have) throw NumericalInstability("no rotation angle produced a valid state", 0);
    return out;
}

std::vector<double> default_theta_grid(std::size_t points) {
    if (points < 2) throw ContractViolation("theta grid needs at least two points");
    std::vector<double> t(points);
    for (std::size_t k = 0; k < points; ++k) t[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points - 1);
    return t;
}

SpinExpectations spin_expectations(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    const Blocks b = blocks(st, grid);
    const double d = weights(st).dot(b.s() * weights(st)).real();
    SpinExpectations e;
    e.sigma_z = (st.a.dot(b.sff * st.a).real() - st.b.dot(b.sgg * st.b).real()) / d;
    e.sigma_x = 2.0 * st.a.dot(b.sfg * st.b).real() / d;
    return e;
}

OrderParameterReport order_parameter(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    const auto m = static_cast<Eigen::Index>(grid.modes_per_bath);
    const auto total = static_cast<Eigen::Index>(grid.total_modes());
    auto flip = [&](const MatrixXcd& d, bool x_bath) {
        MatrixXcd r = d;
        if (x_bath)
            r.rightCols(total - m) *= -1.0;
        else
            r.leftCols(m) *= -1.0;
        return r;
    };
    const Blocks b = blocks(st, grid);
    const double d = weights(st).dot(b.s() * weights(st)).real();
    const complex oz = (st.a.dot(overlap_matrix(st.f, flip(st.f, true)) * st.a) - st.b.dot(overlap_matrix(st.g, flip(st.g, true)) * st.b)) / d;
    const complex ox = (st.a.dot(overlap_matrix(st.f, flip(st.g, false)) * st.b) + st.b.dot(overlap_matrix(st.g, flip(st.f, false)) * st.a)) / d;
    return make_order_parameter(oz.real(), ox.real(), std::max(std::abs(oz.imag()), std::abs(ox.imag())));
}

ZetaScan zeta_scan(const VariationalState& st, const ModeGrid& grid, const std::vector<double>& thetas) {
    ZetaScan scan;
    for (double theta : thetas) {
        const VariationalState r = rotate(st, grid, theta);
        const OrderParameterReport op = order_parameter(r, grid);
        scan.thetas.push_back(theta);
        scan.o_z.push_back(op.o_z);
        scan.o_x.push_back(op.o_x);
        scan.zeta.push_back(op.zeta);
        scan.energies.push_back(energy_and_norm(r, grid).energy);
    }
    return scan;
}

std::vector<double> zeta_peaks(const ZetaScan& scan, double min_height) {
    std::vector<double> peaks;
    const std::size_t n = scan.zeta.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double z = scan.zeta[k];
        if (z < min_height) continue;
        const bool left_ok = k == 0 || z >= scan.zeta[k - 1];
        const bool right_ok = k + 1 == n || z > scan.zeta[k + 1];
        if (left_ok && right_ok) peaks.push_back(scan.thetas[k]);
    }
    return peaks;
}

std::pair<double, double> average_displacements(const VariationalState& st, const ModeGrid& grid) {
    st.validate(grid);
    const Blocks b = blocks(st, grid);
    const double d = weights(st).dot(b.s() * weights(st)).real();
    const auto m = static_cast<Eigen::Index>(grid.modes_per_bath);
    const auto total = static_cast<Eigen::Index>(grid.total_modes());
    double num_x = 0.0, num_z = 0.0;
    for (Eigen::Index l = 0; l < total; ++l) {
        const complex bl = (st.a.dot(b.sff * (st.a.asDiagonal() * st.f.col(l))) + st.b.dot(b.sgg * (st.b.asDiagonal() * st.g.col(l)))) / d;
        const double x = std::numbers::sqrt2 * bl.real();
        (l < m ? num_z : num_x) += grid.lambdas(l) * x;
    }
    const double nz = grid.lambdas.head(m).norm(), nx = grid.lambdas.tail(total - m).norm();
    return {nx > 0 ? num_x / nx : 0.0, nz > 0 ? num_z / nz : 0.0};
}

ed::PopulationField phonon_population(const VariationalState& st, const ed::PopulationGrid& grid, std::size_t mode_x, std::size_t mode_z) {
    const auto total = static_cast<std::size_t>(st.f.cols());
    if (mode_x >= total || mode_z >= total || mode_x == mode_z) throw ContractViolation("invalid mode pair");
    const Eigen::Index n = st.a.size();
    const auto lx = static_cast<Eigen::Index>(mode_x), lz = static_cast<Eigen::Index>(mode_z);
    auto spectator = [&](const MatrixXcd& d) {
        MatrixXcd r = d;
        r.col(lx).setZero();
        r.col(lz).setZero();
        return r;
    };
    ed::PopulationField field;
    field.xs = grid.xs;
    field.zs = grid.zs;
    field.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.zs.size()), static_cast<Eigen::Index>(grid.xs.size()));
    double norm = 0.0;
    for (int branch = 0; branch < 2; ++branch) {
        const VectorXcd& w = branch == 0 ? st.a : st.b;
        const MatrixXcd& d = branch == 0 ? st.f : st.g;
        // spectator overlaps (the selected modes zeroed contribute factor 1)
        const MatrixXcd so = overlap_matrix(spectator(d), spectator(d));
        norm += w.dot(overlap_matrix(d, d) * w).real();
        MatrixXcd phx(n, static_cast<Eigen::Index>(grid.xs.size())), phz(n, static_cast<Eigen::Index>(grid.zs.size()));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < grid.xs.size(); ++k) phx(i, static_cast<Eigen::Index>(k)) = coherent_wavefunction(d(i, lx), grid.xs[k]);
            for (std::size_t k = 0; k < grid.zs.size(); ++k) phz(i, static_cast<Eigen::Index>(k)) = coherent_wavefunction(d(i, lz), grid.zs[k]);
        }
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = 0; q < n; ++q) {
                const complex coef = std::conj(w(p)) * w(q) * so(p, q);
                if (std::abs(coef) == 0.0) continue;
                const MatrixXcd term = (phz.row(p).conjugate().cwiseProduct(phz.row(q))).transpose() *
                                       phx.row(p).conjugate().cwiseProduct(phx.row(q));
                field.values += (coef * term).real();
            }
    }
    field.values /= norm;
    ed::finalize_population(field);
    return field;
}

ObservableReport report(const VariationalState& st, const ModeGrid& grid) {
    ObservableReport r;
    r.energy = energy_and_norm(st, grid).energy;
    const SpinExpectations s = spin_expectations(st, grid);
    r.sigma_z = s.sigma_z;
    r.sigma_x = s.sigma_x;
    const Blocks b = blocks(st, grid);
    const double d = weights(st).dot(b.s() * weights(st)).real();
    const auto m = static_cast<Eigen::Index>(grid.modes_per_bath);
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(grid.total_modes()); ++l) {
        const complex bl = (st.a.dot(b.sff * (st.a.asDiagonal() * st.f.col(l))) + st.b.dot(b.sgg * (st.b.asDiagonal() * st.g.col(l)))) / d;
        (l < m ? r.z_displacements : r.x_displacements).push_back(std::numbers::sqrt2 * bl.real());
    }
    r.order = order_parameter(st, grid);
    return r;
}

nlohmann::json to_json(const VariationalState& st) {
    auto cvec = [](const VectorXcd& v) {
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
        return a;
    };
    auto cmat = [&](const MatrixXcd& m) {
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(cvec(m.row(i).transpose()));
        return a;
    };
    return {{"format", "tbsbm-variational"}, {"N", st.terms()},    {"M", st.total_modes() / 2},
            {"A", cvec(st.a)},                {"B", cvec(st.b)},   {"f", cmat(st.f)},
            {"g", cmat(st.g)}};
}

VariationalState state_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "tbsbm-variational") throw ContractViolation("not a variational state");
    const auto n = j.at("N").get<Eigen::Index>();
    const auto total = 2 * j.at("M").get<Eigen::Index>();
    auto cvec = [](const nlohmann::json& a, Eigen::Index len) {
        if (static_cast<Eigen::Index>(a.size()) != len) throw SizeError("complex vector has wrong length");
        VectorXcd v(len);
        for (Eigen::Index i = 0; i < len; ++i) v(i) = complex(a[static_cast<std::size_t>(i)].at(0).get<double>(), a[static_cast<std::size_t>(i)].at(1).get<double>());
        return v;
    };
    auto cmat = [&](const nlohmann::json& a) {
        if (static_cast<Eigen::Index>(a.size()) != n) throw SizeError("complex table has wrong row count");
        MatrixXcd m(n, total);
        for (Eigen::Index i = 0; i < n; ++i) m.row(i) = cvec(a[static_cast<std::size_t>(i)], total).transpose();
        return m;
    };
    VariationalState st;
    st.a = cvec(j.at("A"), n);
    st.b = cvec(j.at("B"), n);
    st.f = cmat(j.at("f"));
    st.g = cmat(j.at("g"));
    return st;
}

} // namespace tbsbm::variational
