#include "tbsbm/dmrg_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/SVD>

#include "tbsbm/errors.hpp"
#include "tbsbm/linalg.hpp"

namespace tbsbm::dmrg {

using mps::Environment;
using mps::Mpo;
using mps::MpoSite;

std::string to_string(BasisPolicy p) {
    switch (p) {
        case BasisPolicy::Restricted: return "restricted";
        case BasisPolicy::AOPB: return "aopb";
        case BasisPolicy::SOPB: return "sopb";
    }
    return "?";
}

BasisPolicy policy_from_string(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (n == "restricted") return BasisPolicy::Restricted;
    if (n == "aopb") return BasisPolicy::AOPB;
    if (n == "sopb") return BasisPolicy::SOPB;
    throw ContractViolation("unknown basis policy: " + name);
}

void SopbConfig::validate() const {
    if (!(a >= 0.0 && a <= 1.0)) throw ContractViolation("SOPB mixing weight must lie in [0, 1]");
    if (n_opt < 1 || n_opt > n_bare) throw ContractViolation("need 1 <= n_opt <= n_bare");
    if (sweeps < 1) throw ContractViolation("need at least one sweep");
    if (!(convergence_tol > 0.0)) throw ContractViolation("convergence tolerance must be positive");
}

void DmrgConfig::validate() const {
    basis.validate();
    if (bond_dim < 1) throw ContractViolation("bond dimension must be positive");
    if (initial_bond < 1) throw ContractViolation("initial bond dimension must be positive");
    if (lanczos_krylov < 2) throw ContractViolation("Lanczos needs at least 2 Krylov vectors");
    if (lanczos_restarts < 0) throw ContractViolation("Lanczos restart count must be non-negative");
    if (!(guess_noise >= 0.0 && guess_noise < 1.0)) throw ContractViolation("guess noise must lie in [0, 1)");
}

BasisUpdate optimize_basis(const Eigen::MatrixXd& rho_bare, double a, std::size_t n_opt) {
    const Eigen::Index d = rho_bare.rows();
    if (rho_bare.cols() != d) throw ContractViolation("density matrix must be square");
    if (n_opt < 1 || static_cast<Eigen::Index>(n_opt) > d) throw ContractViolation("need 1 <= n_opt <= bare dimension");
    if (!(a >= 0.0 && a <= 1.0)) throw ContractViolation("mixing weight must lie in [0, 1]");

    const Eigen::MatrixXd p = fock::local_parity(static_cast<std::size_t>(d));
    Eigen::MatrixXd rho = 0.5 * (rho_bare + rho_bare.transpose());
    if (a < 1.0) rho = (a * rho + (1.0 - a) * (p * rho * p)).eval();

    bool parity_blocked = true;
    for (Eigen::Index i = 0; i < d && parity_blocked; ++i)
        for (Eigen::Index k = 0; k < d; ++k)
            if ((i + k) % 2 == 1 && rho(i, k) != 0.0) {
                parity_blocked = false;
                break;
            }

    struct Candidate {
        double weight;
        Eigen::VectorXd vec;
        double mean_n;
        int parity;
        Eigen::Index order;
    };
    std::vector<Candidate> cand;
    auto add = [&](const Eigen::VectorXd& v, double w, int parity) {
        Eigen::VectorXd u = v;
        Eigen::Index arg;
        u.cwiseAbs().maxCoeff(&arg);
        if (u(arg) < 0) u = -u;
        double mean_n = 0.0;
        for (Eigen::Index n = 0; n < d; ++n) mean_n += static_cast<double>(n) * u(n) * u(n);
        cand.push_back({w, u, mean_n, parity, static_cast<Eigen::Index>(cand.size())});
    };

    if (parity_blocked) {
        for (int sector = 0; sector < 2; ++sector) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index n = sector; n < d; n += 2) idx.push_back(n);
            if (idx.empty()) continue;
            const auto k = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd block(k, k);
            for (Eigen::Index i = 0; i < k; ++i)
                for (Eigen::Index j = 0; j < k; ++j) block(i, j) = rho(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
            for (Eigen::Index c = k; c-- > 0;) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
                for (Eigen::Index i = 0; i < k; ++i) v(idx[static_cast<std::size_t>(i)]) = es.eigenvectors()(i, c);
                add(v, es.eigenvalues()(c), sector == 0 ? 1 : -1);
            }
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho);
        for (Eigen::Index c = d; c-- > 0;) {
            const Eigen::VectorXd v = es.eigenvectors().col(c);
            const double pv = v.dot(p * v);
            const int parity = std::abs(std::abs(pv) - 1.0) < 1e-12 ? (pv > 0 ? 1 : -1) : 0;
            add(v, es.eigenvalues()(c), parity);
        }
    }

    std::stable_sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.weight > y.weight; });
    // resolve ties (equal weight to rounding) by lower <n>, then even before odd before mixed
    constexpr double tie_tol = 1e-13;
    auto sector_rank = [](int parity) { return parity == 1 ? 0 : (parity == -1 ? 1 : 2); };
    for (std::size_t start = 0; start < cand.size();) {
        std::size_t stop = start + 1;
        while (stop < cand.size() && cand[stop - 1].weight - cand[stop].weight <= tie_tol) ++stop;
        std::stable_sort(cand.begin() + static_cast<std::ptrdiff_t>(start), cand.begin() + static_cast<std::ptrdiff_t>(stop),
                         [&](const Candidate& x, const Candidate& y) {
                             if (std::abs(x.mean_n - y.mean_n) > 1e-12) return x.mean_n < y.mean_n;
                             return sector_rank(x.parity) < sector_rank(y.parity);
                         });
        start = stop;
    }

    BasisUpdate up;
    Eigen::MatrixXd u(d, static_cast<Eigen::Index>(n_opt));
    up.weights.resize(static_cast<Eigen::Index>(n_opt));
    double kept = 0.0;
    for (std::size_t k = 0; k < n_opt; ++k) {
        u.col(static_cast<Eigen::Index>(k)) = cand[k].vec;
        up.weights(static_cast<Eigen::Index>(k)) = cand[k].weight;
        up.parities.push_back(cand[k].parity);
        kept += cand[k].weight;
    }
    const double trace = rho.trace();
    up.discarded_weight = std::max(0.0, trace > 0 ? (trace - kept) / trace : 0.0);
    up.basis = fock::LocalBasis(u);
    return up;
}

Eigen::MatrixXd site_density_matrix(const RealMps& state, std::size_t site) {
    if (site >= state.sites()) throw ContractViolation("site out of range");
    RealMps s = state;
    mps::move_center(s, site);
    const auto d = static_cast<Eigen::Index>(s.phys_dim(site));
    Eigen::MatrixXd rho(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index k = 0; k < d; ++k)
            rho(i, k) = (s.tensors[site][static_cast<std::size_t>(i)].cwiseProduct(s.tensors[site][static_cast<std::size_t>(k)])).sum();
    return rho / rho.trace();
}

BasisUpdate optimize_site_aopb(const RealMps& state, std::size_t site, std::size_t n_opt) {
    if (!state.bases.at(site).is_identity()) throw ContractViolation("active site must hold its bare basis");
    return optimize_basis(site_density_matrix(state, site), 1.0, n_opt);
}

BasisUpdate optimize_site_sopb(const RealMps& state, std::size_t site, const SopbConfig& cfg) {
    cfg.validate();
    if (!state.bases.at(site).is_identity()) throw ContractViolation("active site must hold its bare basis");
    return optimize_basis(site_density_matrix(state, site), cfg.a, cfg.n_opt);
}

namespace {

// Effective Hamiltonian on a two-site block Theta[s1][s2] (each D_l x D_r, column-major),
// stored at offset (s1 d2 + s2) D_l D_r.
class TwoSiteOperator {
public:
    TwoSiteOperator(const Environment<double>& l, const MpoSite& w1, const MpoSite& w2, const Environment<double>& r,
                    std::size_t d1, std::size_t d2, Eigen::Index dl, Eigen::Index dr)
        : l_(l), w1_(w1), w2_(w2), d1_(d1), d2_(d2), dl_(dl), dr_(dr) {
        for (const auto& m : r) rt_.push_back(m.transpose());
    }

    void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        const Eigen::Index blk = dl_ * dr_;
        const std::size_t nb = d1_ * d2_;
        std::vector<std::vector<Eigen::MatrixXd>> x(static_cast<std::size_t>(w1_.rows));
        for (const auto& e : w1_.entries) {
            auto& xa = x[static_cast<std::size_t>(e.row)];
            if (!xa.empty()) continue;
            const Eigen::MatrixXd& la = l_[static_cast<std::size_t>(e.row)];
            for (std::size_t s = 0; s < nb; ++s)
                xa.push_back(la * Eigen::Map<const Eigen::MatrixXd>(in.data() + static_cast<Eigen::Index>(s) * blk, dl_, dr_));
        }
        std::vector<std::vector<Eigen::MatrixXd>> y(static_cast<std::size_t>(w1_.cols));
        for (const auto& e : w1_.entries) {
            auto& yb = y[static_cast<std::size_t>(e.col)];
            if (yb.empty()) yb.assign(nb, Eigen::MatrixXd::Zero(dl_, dr_));
            const auto& xa = x[static_cast<std::size_t>(e.row)];
            for (std::size_t sp = 0; sp < d1_; ++sp)
                for (std::size_t s = 0; s < d1_; ++s) {
                    const double v = e.op(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(s));
                    if (v == 0.0) continue;
                    for (std::size_t s2 = 0; s2 < d2_; ++s2) yb[sp * d2_ + s2] += v * xa[s * d2_ + s2];
                }
        }
        std::vector<std::vector<Eigen::MatrixXd>> z(static_cast<std::size_t>(w2_.cols));
        for (const auto& e : w2_.entries) {
            const auto& yb = y[static_cast<std::size_t>(e.row)];
            if (yb.empty()) continue;
            auto& zc = z[static_cast<std::size_t>(e.col)];
            if (zc.empty()) zc.assign(nb, Eigen::MatrixXd::Zero(dl_, dr_));
            for (std::size_t sp = 0; sp < d2_; ++sp)
                for (std::size_t s = 0; s < d2_; ++s) {
                    const double v = e.op(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(s));
                    if (v == 0.0) continue;
                    for (std::size_t s1 = 0; s1 < d1_; ++s1) zc[s1 * d2_ + sp] += v * yb[s1 * d2_ + s];
                }
        }
        out = Eigen::VectorXd::Zero(in.size());
        for (std::size_t c = 0; c < z.size(); ++c) {
            if (z[c].empty()) continue;
            for (std::size_t s = 0; s < nb; ++s) {
                Eigen::Map<Eigen::MatrixXd> o(out.data() + static_cast<Eigen::Index>(s) * blk, dl_, dr_);
                o.noalias() += z[c][s] * rt_[c];
            }
        }
    }

private:
    const Environment<double>& l_;
    const MpoSite& w1_;
    const MpoSite& w2_;
    std::vector<Eigen::MatrixXd> rt_;
    std::size_t d1_, d2_;
    Eigen::Index dl_, dr_;
};

struct SweepStats {
    double energy{0.0};
    double max_truncated_weight{0.0};
    double max_discarded_basis_weight{0.0};
};

class Engine {
public:
    Engine(const ChainModel& model, const DmrgConfig& cfg, RealMps state, double extra_bias)
        : model_(model), cfg_(cfg), s_(std::move(state)), extra_bias_(extra_bias) {
        mps::canonicalize(s_, 0);
        rebuild();
    }

    void set_extra_bias(double bias) {
        extra_bias_ = bias;
        rebuild();
    }

    // Kicks apply to the next sweep only.
    void kick_next_sweep() { noisy_ = true; }

    SweepStats sweep(bool optimize) {
        SweepStats st;
        const std::size_t n = s_.sites();
        if (n == 1) {
            solve_single();
            st.energy = energy_;
            return st;
        }
        for (std::size_t j = 0; j + 1 < n; ++j) update_bond(j, true, optimize, st);
        for (std::size_t j = n - 1; j-- > 0;) update_bond(j, false, optimize, st);
        noisy_ = false;
        st.energy = energy_;
        return st;
    }

    const RealMps& state() const { return s_; }
    RealMps& state() { return s_; }

private:
    void rebuild() {
        const std::size_t n = s_.sites();
        mpo_ = mps::build_mpo(model_, s_.bases, extra_bias_);
        left_.assign(n, {});
        right_.assign(n, {});
        mps::move_center(s_, 0);
        left_[0] = mps::left_boundary<double>(mpo_.front());
        right_[n - 1] = mps::right_boundary<double>(mpo_.back());
        for (std::size_t j = n - 1; j > 0; --j) right_[j - 1] = mps::extend_right(right_[j], s_.tensors[j], mpo_[j]);
    }

    void solve_single() {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        for (const auto& e : mpo_[0].entries)
            if (e.row == mpo_[0].rows - 1 && e.col == 0) h = e.op;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        Eigen::VectorXd v = es.eigenvectors().col(0);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        for (Eigen::Index k = 0; k < 2; ++k) s_.tensors[0][static_cast<std::size_t>(k)] = Eigen::MatrixXd::Constant(1, 1, v(k));
        energy_ = es.eigenvalues()(0);
    }

    void expand_to_bare(std::size_t site) {
        const Eigen::MatrixXd u = s_.bases[site].transform();
        if (s_.bases[site].is_identity()) return;
        const Eigen::Index bare = u.rows();
        std::vector<Eigen::MatrixXd> t(static_cast<std::size_t>(bare), Eigen::MatrixXd::Zero(s_.left_dim(site), s_.right_dim(site)));
        for (Eigen::Index nb = 0; nb < bare; ++nb)
            for (std::size_t k = 0; k < s_.phys_dim(site); ++k) {
                const double c = u(nb, static_cast<Eigen::Index>(k));
                if (c != 0.0) t[static_cast<std::size_t>(nb)] += c * s_.tensors[site][k];
            }
        s_.tensors[site] = std::move(t);
        s_.bases[site] = fock::LocalBasis::bare(static_cast<std::size_t>(bare));
        mpo_[site] = mps::build_mpo_site(model_, s_.bases[site], site, extra_bias_);
    }

    void update_bond(std::size_t j, bool rightward, bool optimize, SweepStats& st) {
        const std::size_t act = rightward ? j : j + 1;
        const bool opt_site = optimize && model_.is_boson(act) && cfg_.policy != BasisPolicy::Restricted;
        if (opt_site) expand_to_bare(act);

        const std::size_t d1 = s_.phys_dim(j), d2 = s_.phys_dim(j + 1);
        const Eigen::Index dl = s_.left_dim(j), dr = s_.right_dim(j + 1);
        const Eigen::Index blk = dl * dr;
        Eigen::VectorXd theta(static_cast<Eigen::Index>(d1 * d2) * blk);
        for (std::size_t a = 0; a < d1; ++a)
            for (std::size_t b = 0; b < d2; ++b) {
                Eigen::Map<Eigen::MatrixXd> m(theta.data() + static_cast<Eigen::Index>(a * d2 + b) * blk, dl, dr);
                m.noalias() = s_.tensors[j][a] * s_.tensors[j + 1][b];
            }

        const TwoSiteOperator op(left_[j], mpo_[j], mpo_[j + 1], right_[j + 1], d1, d2, dl, dr);
        const auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { op.apply(in, out); };
        // A guess that is an exact excited eigenvector spans an invariant Krylov space; the seeded
        // admixture reopens it. The unperturbed guess is kept when Lanczos does not improve on it.
        Eigen::VectorXd guess = theta;
        if (noisy_ && cfg_.guess_noise > 0.0) {
            Eigen::VectorXd kick(guess.size());
            for (Eigen::Index i = 0; i < kick.size(); ++i) kick(i) = gauss_(rng_);
            guess += cfg_.guess_noise * guess.norm() * kick.normalized();
        }
        const auto pairs = linalg::lanczos_ground(apply, guess, cfg_.lanczos_tol, cfg_.lanczos_krylov, cfg_.lanczos_restarts);
        Eigen::VectorXd h_theta(theta.size());
        apply(theta, h_theta);
        const double guess_energy = theta.dot(h_theta) / theta.squaredNorm();
        if (pairs.values(0) <= guess_energy) {
            theta = pairs.vectors.col(0);
            energy_ = pairs.values(0);
        } else {
            theta.normalize();
            energy_ = guess_energy;
        }

        // matrix view M((s1, alpha), (s2, gamma))
        Eigen::MatrixXd m(static_cast<Eigen::Index>(d1) * dl, static_cast<Eigen::Index>(d2) * dr);
        for (std::size_t a = 0; a < d1; ++a)
            for (std::size_t b = 0; b < d2; ++b)
                m.block(static_cast<Eigen::Index>(a) * dl, static_cast<Eigen::Index>(b) * dr, dl, dr) =
                    Eigen::Map<const Eigen::MatrixXd>(theta.data() + static_cast<Eigen::Index>(a * d2 + b) * blk, dl, dr);

        std::size_t nd1 = d1, nd2 = d2;
        if (opt_site) {
            const bool left_active = act == j;
            const std::size_t d = left_active ? d1 : d2;
            const Eigen::Index inner = left_active ? dl : dr;
            const Eigen::MatrixXd g = left_active ? Eigen::MatrixXd(m * m.transpose()) : Eigen::MatrixXd(m.transpose() * m);
            Eigen::MatrixXd rho(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        g.block(static_cast<Eigen::Index>(a) * inner, static_cast<Eigen::Index>(b) * inner, inner, inner).trace();
            rho /= rho.trace();
            const double mix = cfg_.policy == BasisPolicy::SOPB ? cfg_.basis.a : 1.0;
            BasisUpdate up = optimize_basis(rho, mix, std::min(cfg_.basis.n_opt, d));
            st.max_discarded_basis_weight = std::max(st.max_discarded_basis_weight, up.discarded_weight);
            const Eigen::MatrixXd& u = up.basis.transform();
            const auto k = u.cols();
            Eigen::MatrixXd pm;
            if (left_active) {
                pm = Eigen::MatrixXd::Zero(k * dl, m.cols());
                for (Eigen::Index kk = 0; kk < k; ++kk)
                    for (std::size_t a = 0; a < d; ++a) {
                        const double c = u(static_cast<Eigen::Index>(a), kk);
                        if (c != 0.0) pm.middleRows(kk * dl, dl) += c * m.middleRows(static_cast<Eigen::Index>(a) * dl, dl);
                    }
                nd1 = static_cast<std::size_t>(k);
            } else {
                pm = Eigen::MatrixXd::Zero(m.rows(), k * dr);
                for (Eigen::Index kk = 0; kk < k; ++kk)
                    for (std::size_t b = 0; b < d; ++b) {
                        const double c = u(static_cast<Eigen::Index>(b), kk);
                        if (c != 0.0) pm.middleCols(kk * dr, dr) += c * m.middleCols(static_cast<Eigen::Index>(b) * dr, dr);
                    }
                nd2 = static_cast<std::size_t>(k);
            }
            const double nrm = pm.norm();
            if (nrm == 0.0) throw NumericalInstability("basis projection annihilated the state", act);
            m = pm / nrm;
            s_.bases[act] = up.basis;
            mpo_[act] = mps::build_mpo_site(model_, s_.bases[act], act, extra_bias_);
        }

        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd sv = svd.singularValues();
        const double total = sv.squaredNorm();
        Eigen::Index keep = 0;
        while (keep < sv.size() && keep < static_cast<Eigen::Index>(cfg_.bond_dim) && sv(keep) > 1e-14 * sv(0)) ++keep;
        keep = std::max<Eigen::Index>(keep, 1);
        const double kept = sv.head(keep).squaredNorm();
        st.max_truncated_weight = std::max(st.max_truncated_weight, total > 0 ? (total - kept) / total : 0.0);
        const Eigen::VectorXd sk = sv.head(keep) / std::sqrt(kept);
        s_.bond_spectra[j] = sk;

        const Eigen::MatrixXd u = svd.matrixU().leftCols(keep);
        const Eigen::MatrixXd vt = svd.matrixV().leftCols(keep).transpose();
        std::vector<Eigen::MatrixXd> a1(nd1), a2(nd2);
        if (rightward) {
            const Eigen::MatrixXd svt = sk.asDiagonal() * vt;
            for (std::size_t a = 0; a < nd1; ++a) a1[a] = u.middleRows(static_cast<Eigen::Index>(a) * dl, dl);
            for (std::size_t b = 0; b < nd2; ++b) a2[b] = svt.middleCols(static_cast<Eigen::Index>(b) * dr, dr);
        } else {
            const Eigen::MatrixXd us = u * sk.asDiagonal();
            for (std::size_t a = 0; a < nd1; ++a) a1[a] = us.middleRows(static_cast<Eigen::Index>(a) * dl, dl);
            for (std::size_t b = 0; b < nd2; ++b) a2[b] = vt.middleCols(static_cast<Eigen::Index>(b) * dr, dr);
        }
        s_.tensors[j] = std::move(a1);
        s_.tensors[j + 1] = std::move(a2);
        if (rightward) {
            s_.center = j + 1;
            left_[j + 1] = mps::extend_left(left_[j], s_.tensors[j], mpo_[j]);
        } else {
            s_.center = j;
            right_[j] = mps::extend_right(right_[j + 1], s_.tensors[j + 1], mpo_[j + 1]);
        }
    }

    const ChainModel& model_;
    const DmrgConfig& cfg_;
    RealMps s_;
    double extra_bias_;
    std::mt19937_64 rng_{cfg_.seed ^ 0x9e3779b97f4a7c15ULL};
    std::normal_distribution<double> gauss_;
    bool noisy_{false};
    Mpo mpo_;
    std::vector<Environment<double>> left_, right_;
    double energy_{0.0};
};

std::vector<fock::LocalBasis> restricted_bases(const ChainModel& model, const SopbConfig& b) {
    std::vector<fock::LocalBasis> bases;
    for (std::size_t j = 0; j < model.sites(); ++j)
        bases.push_back(model.is_boson(j) ? fock::LocalBasis::fock_truncated(b.n_bare, b.n_opt) : fock::LocalBasis::bare(2));
    return bases;
}

bool settled(double previous, double current, double tol) {
    return std::abs(current - previous) <= tol * std::max(1.0, std::abs(current));
}

// Runs sweeps until the energy settles. Returns true on convergence.
bool run_stage(Engine& engine, const DmrgConfig& cfg, bool optimize, const std::string& stage, std::vector<SweepRecord>& history,
               bool check_rise, double& final_truncation) {
    double previous = 0.0;
    for (int k = 0; k < cfg.basis.sweeps; ++k) {
        const SweepStats st = engine.sweep(optimize);
        history.push_back({stage, k, st.energy, st.max_truncated_weight, st.max_discarded_basis_weight});
        final_truncation = st.max_truncated_weight;
        if (k > 0 && check_rise && st.energy > previous + cfg.instability_tol * std::max(1.0, std::abs(previous)))
            throw NumericalInstability("energy rose between optimization passes", static_cast<std::size_t>(k));
        if (k + 1 >= cfg.min_sweeps && k > 0 && settled(previous, st.energy, cfg.basis.convergence_tol)) return true;
        previous = st.energy;
    }
    return false;
}

} // namespace

DmrgResult warmup_restricted(const ChainModel& model, const DmrgConfig& cfg) {
    model.validate();
    cfg.validate();
    RealMps init = mps::random_mps(restricted_bases(model, cfg.basis), std::min(cfg.initial_bond, cfg.bond_dim), cfg.seed);
    // Near-vacuum bosons and the spin in the member the total field favours (positive field:
    // index 1, sigma^z = -1). A fully random start carries random displacements that pick a
    // localized branch by chance, and local updates cannot tunnel out of it. The random
    // admixture keeps every symmetry sector reachable.
    for (std::size_t j = 0; j < init.sites(); ++j)
        if (model.is_boson(j))
            for (std::size_t k = 1; k < init.tensors[j].size(); ++k) init.tensors[j][k] *= 0.05;
    const double field = model.bias + cfg.warmup_bias;
    if (field != 0.0) init.tensors[model.spin_site()][field > 0.0 ? 0 : 1] *= 0.05;
    mps::canonicalize(init, 0);
    init.bond_dim = cfg.bond_dim;
    init.warmup_bias = cfg.warmup_bias;
    Engine engine(model, cfg, std::move(init), cfg.warmup_bias);
    engine.kick_next_sweep();
    DmrgResult res;
    res.converged = run_stage(engine, cfg, false, "warmup", res.history, false, res.max_truncated_weight);
    res.state = engine.state();
    mps::canonicalize(res.state, 0);
    res.report = measure(model, res.state);
    return res;
}

DmrgResult ground_state(const ChainModel& model, const DmrgConfig& cfg) {
    DmrgResult warm = warmup_restricted(model, cfg);
    Engine engine(model, cfg, warm.state, 0.0);
    DmrgResult res;
    res.history = std::move(warm.history);
    const bool optimize = cfg.policy != BasisPolicy::Restricted;
    res.converged = run_stage(engine, cfg, optimize, "production", res.history, optimize, res.max_truncated_weight);
    res.state = engine.state();
    mps::canonicalize(res.state, 0);
    res.report = measure(model, res.state);
    return res;
}

ObservableReport measure(const ChainModel& model, const RealMps& state) {
    ObservableReport r;
    const Mpo h = mps::build_mpo(model, state.bases, 0.0);
    r.energy = mps::mpo_expectation(state, h);
    const std::size_t spin = model.spin_site();
    const Eigen::MatrixXd sz = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    Eigen::MatrixXd sx(2, 2);
    sx << 0, 1, 1, 0;
    r.sigma_z = mps::local_expectation(state, spin, sz);
    r.sigma_x = mps::local_expectation(state, spin, sx);
    for (std::size_t i = 0; i < model.chain_x.length(); ++i) {
        const std::size_t site = model.layout_site(bath::BathId::X, i);
        r.x_displacements.push_back(mps::local_expectation(state, site, state.bases[site].position()));
    }
    for (std::size_t i = 0; i < model.chain_z.length(); ++i) {
        const std::size_t site = model.layout_site(bath::BathId::Z, i);
        r.z_displacements.push_back(mps::local_expectation(state, site, state.bases[site].position()));
    }
    return r;
}

nlohmann::json checkpoint(const ChainModel& model, const DmrgConfig& cfg, const DmrgResult& result) {
    nlohmann::json j;
    j["model"] = {{"chain_z", {{"omegas", model.chain_z.omegas}, {"hops", model.chain_z.hops}, {"eta", model.chain_z.eta}}},
                  {"chain_x", {{"omegas", model.chain_x.omegas}, {"hops", model.chain_x.hops}, {"eta", model.chain_x.eta}}},
                  {"bias", model.bias}};
    j["config"] = {{"policy", to_string(cfg.policy)},
                   {"bond_dim", cfg.bond_dim},
                   {"a", cfg.basis.a},
                   {"n_bare", cfg.basis.n_bare},
                   {"n_opt", cfg.basis.n_opt},
                   {"sweeps", cfg.basis.sweeps},
                   {"convergence_tol", cfg.basis.convergence_tol},
                   {"warmup_bias", cfg.warmup_bias},
                   {"seed", cfg.seed}};
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : result.history)
        hist.push_back({{"stage", h.stage},
                        {"sweep", h.sweep},
                        {"energy", h.energy},
                        {"max_truncated_weight", h.max_truncated_weight},
                        {"max_discarded_basis_weight", h.max_discarded_basis_weight}});
    j["history"] = std::move(hist);
    j["converged"] = result.converged;
    j["state"] = mps::to_json(result.state);
    return j;
}

} // namespace tbsbm::dmrg
