#include "tbsbm/mps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tbsbm/errors.hpp"

namespace tbsbm::mps {

namespace {

template <typename T>
Matrix<T> adj(const Matrix<T>& m) {
    return m.adjoint();
}

double real_part(double v) { return v; }
double real_part(complex v) { return v.real(); }

enum class OpKind { Identity, B, BDagger, Q, SigmaZ, SigmaX };

struct BondTerm {
    double coefficient;
    OpKind left;
    OpKind right;
};

std::vector<BondTerm> bond_terms(const ChainModel& m, std::size_t j) {
    const std::size_t spin = m.spin_site();
    std::vector<BondTerm> terms;
    if (j + 1 < spin) {
        // x_{i} (site j) with x_{i-1} (site j+1); hop index i-1
        const std::size_t i = m.chain_index(j);
        const double t = m.chain_x.hops[i - 1];
        terms.push_back({t, OpKind::BDagger, OpKind::B});
        terms.push_back({t, OpKind::B, OpKind::BDagger});
    } else if (j + 1 == spin) {
        terms.push_back({m.chain_x.spin_coupling(), OpKind::Q, OpKind::SigmaX});
    } else if (j == spin) {
        if (m.chain_z.length() > 0) terms.push_back({m.chain_z.spin_coupling(), OpKind::SigmaZ, OpKind::Q});
    } else {
        const std::size_t i = m.chain_index(j);
        const double t = m.chain_z.hops[i];
        terms.push_back({t, OpKind::BDagger, OpKind::B});
        terms.push_back({t, OpKind::B, OpKind::BDagger});
    }
    return terms;
}

Eigen::MatrixXd site_operator(const fock::LocalBasis& basis, OpKind kind) {
    switch (kind) {
        case OpKind::Identity: return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(basis.dim()), static_cast<Eigen::Index>(basis.dim()));
        case OpKind::B: return basis.b();
        case OpKind::BDagger: return basis.b_dagger();
        case OpKind::Q: {
            const fock::LadderOps ops = fock::ladder_matrices(basis.bare_dim());
            return basis.project(ops.b + ops.b_dagger);
        }
        case OpKind::SigmaZ: return Eigen::Vector2d(1.0, -1.0).asDiagonal();
        case OpKind::SigmaX: {
            Eigen::MatrixXd x(2, 2);
            x << 0, 1, 1, 0;
            return x;
        }
    }
    return {};
}

template <typename T>
void left_orthonormalize_site(MpsState<T>& s, std::size_t j) {
    // QR of the (d D_l) x D_r matrix; R is pushed into site j+1.
    const std::size_t d = s.phys_dim(j);
    const Eigen::Index dl = s.left_dim(j), dr = s.right_dim(j);
    Matrix<T> m(static_cast<Eigen::Index>(d) * dl, dr);
    for (std::size_t k = 0; k < d; ++k) m.middleRows(static_cast<Eigen::Index>(k) * dl, dl) = s.tensors[j][k];
    Eigen::HouseholderQR<Matrix<T>> qr(m);
    const Eigen::Index r = std::min(m.rows(), m.cols());
    Matrix<T> q = qr.householderQ() * Matrix<T>::Identity(m.rows(), r);
    Matrix<T> rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    // fix signs so that diag(R) >= 0 (deterministic gauge)
    for (Eigen::Index i = 0; i < r; ++i) {
        if (real_part(rr(i, i)) < 0) {
            rr.row(i) *= T(-1);
            q.col(i) *= T(-1);
        }
    }
    for (std::size_t k = 0; k < d; ++k) s.tensors[j][k] = q.middleRows(static_cast<Eigen::Index>(k) * dl, dl);
    for (auto& a : s.tensors[j + 1]) a = (rr * a).eval();
}

template <typename T>
void right_orthonormalize_site(MpsState<T>& s, std::size_t j) {
    // LQ via QR of the transpose of the D_l x (d D_r) matrix; L is pushed into site j-1.
    const std::size_t d = s.phys_dim(j);
    const Eigen::Index dl = s.left_dim(j), dr = s.right_dim(j);
    Matrix<T> m(dl, static_cast<Eigen::Index>(d) * dr);
    for (std::size_t k = 0; k < d; ++k) m.middleCols(static_cast<Eigen::Index>(k) * dr, dr) = s.tensors[j][k];
    Matrix<T> mt = m.adjoint();
    Eigen::HouseholderQR<Matrix<T>> qr(mt);
    const Eigen::Index r = std::min(mt.rows(), mt.cols());
    Matrix<T> q = qr.householderQ() * Matrix<T>::Identity(mt.rows(), r);
    Matrix<T> rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < r; ++i) {
        if (real_part(rr(i, i)) < 0) {
            rr.row(i) *= T(-1);
            q.col(i) *= T(-1);
        }
    }
    const Matrix<T> qa = q.adjoint();  // r x (d D_r)
    const Matrix<T> l = rr.adjoint();  // D_l x r
    for (std::size_t k = 0; k < d; ++k) s.tensors[j][k] = qa.middleCols(static_cast<Eigen::Index>(k) * dr, dr);
    for (auto& a : s.tensors[j - 1]) a = (a * l).eval();
}

} // namespace

bath::BathId ChainModel::bath_of(std::size_t site) const {
    if (site == spin_site() || site >= sites()) throw ContractViolation("site is not a boson site");
    return site < spin_site() ? bath::BathId::X : bath::BathId::Z;
}

std::size_t ChainModel::chain_index(std::size_t site) const {
    if (bath_of(site) == bath::BathId::X) return spin_site() - 1 - site;
    return site - spin_site() - 1;
}

std::size_t ChainModel::layout_site(bath::BathId bath, std::size_t index) const {
    if (bath == bath::BathId::X) {
        if (index >= chain_x.length()) throw ContractViolation("x chain index out of range");
        return spin_site() - 1 - index;
    }
    if (index >= chain_z.length()) throw ContractViolation("z chain index out of range");
    return spin_site() + 1 + index;
}

void ChainModel::validate() const {
    chain_z.validate();
    chain_x.validate();
    if (!std::isfinite(bias)) throw ContractViolation("bias must be finite");
}

ComplexMps to_complex(const RealMps& s) {
    ComplexMps c;
    c.bases = s.bases;
    c.center = s.center;
    c.bond_dim = s.bond_dim;
    c.warmup_bias = s.warmup_bias;
    c.bond_spectra = s.bond_spectra;
    c.tensors.resize(s.sites());
    for (std::size_t j = 0; j < s.sites(); ++j)
        for (const auto& a : s.tensors[j]) c.tensors[j].push_back(a.cast<complex>());
    return c;
}

RealMps random_mps(const std::vector<fock::LocalBasis>& bases, std::size_t bond, std::uint64_t seed) {
    const std::size_t n = bases.size();
    if (n == 0) throw ContractViolation("empty MPS");
    if (bond == 0) throw ContractViolation("bond dimension must be positive");
    std::vector<double> left(n + 1, 1.0), right(n + 1, 1.0);
    for (std::size_t j = 0; j < n; ++j) left[j + 1] = std::min(left[j] * static_cast<double>(bases[j].dim()), 1e18);
    for (std::size_t j = n; j-- > 0;) right[j] = std::min(right[j + 1] * static_cast<double>(bases[j].dim()), 1e18);
    std::vector<Eigen::Index> dims(n + 1);
    for (std::size_t j = 0; j <= n; ++j)
        dims[j] = static_cast<Eigen::Index>(std::min({left[j], right[j], static_cast<double>(bond)}));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    RealMps s;
    s.bases = bases;
    s.bond_dim = bond;
    s.tensors.resize(n);
    s.bond_spectra.assign(n > 0 ? n - 1 : 0, Eigen::VectorXd());
    for (std::size_t j = 0; j < n; ++j) {
        s.tensors[j].resize(bases[j].dim());
        for (auto& a : s.tensors[j]) {
            a.resize(dims[j], dims[j + 1]);
            for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = gauss(rng);
        }
    }
    s.center = n - 1;
    canonicalize(s, 0);
    return s;
}

RealMps product_mps(const std::vector<fock::LocalBasis>& bases, const std::vector<Eigen::VectorXd>& locals) {
    if (bases.size() != locals.size()) throw ContractViolation("one local vector per site required");
    RealMps s;
    s.bases = bases;
    s.bond_dim = 1;
    s.tensors.resize(bases.size());
    s.bond_spectra.assign(bases.size() > 0 ? bases.size() - 1 : 0, Eigen::VectorXd::Ones(1));
    for (std::size_t j = 0; j < bases.size(); ++j) {
        if (static_cast<std::size_t>(locals[j].size()) != bases[j].dim()) throw ContractViolation("local vector dimension mismatch");
        const Eigen::VectorXd v = locals[j].normalized();
        for (Eigen::Index k = 0; k < v.size(); ++k) s.tensors[j].push_back(Eigen::MatrixXd::Constant(1, 1, v(k)));
    }
    s.center = 0;
    return s;
}

template <typename T>
void move_center(MpsState<T>& s, std::size_t target) {
    if (target >= s.sites()) throw ContractViolation("center out of range");
    while (s.center < target) {
        left_orthonormalize_site(s, s.center);
        ++s.center;
    }
    while (s.center > target) {
        right_orthonormalize_site(s, s.center);
        --s.center;
    }
}

template <typename T>
void canonicalize(MpsState<T>& s, std::size_t center) {
    if (center >= s.sites()) throw ContractViolation("center out of range");
    for (std::size_t j = 0; j < center; ++j) left_orthonormalize_site(s, j);
    for (std::size_t j = s.sites() - 1; j > center; --j) right_orthonormalize_site(s, j);
    s.center = center;
    // normalise at the center
    double n2 = 0.0;
    for (const auto& a : s.tensors[center]) n2 += a.squaredNorm();
    const double nrm = std::sqrt(n2);
    if (nrm == 0.0) throw NumericalInstability("MPS has zero norm", center);
    for (auto& a : s.tensors[center]) a /= T(nrm);
}

template <typename T>
T overlap(const MpsState<T>& bra, const MpsState<T>& ket) {
    if (bra.sites() != ket.sites()) throw ContractViolation("overlap of MPS with different lengths");
    Matrix<T> e = Matrix<T>::Ones(1, 1);
    for (std::size_t j = 0; j < ket.sites(); ++j) {
        if (bra.phys_dim(j) != ket.phys_dim(j)) throw ContractViolation("overlap of MPS with different local dimensions");
        Matrix<T> next = Matrix<T>::Zero(bra.right_dim(j), ket.right_dim(j));
        for (std::size_t k = 0; k < ket.phys_dim(j); ++k) next.noalias() += adj(bra.tensors[j][k]) * e * ket.tensors[j][k];
        e = std::move(next);
    }
    return e(0, 0);
}

template <typename T>
double norm(const MpsState<T>& s) {
    return std::sqrt(std::abs(real_part(overlap(s, s))));
}

template <typename T>
double gauge_error(const MpsState<T>& s) {
    double err = 0.0;
    for (std::size_t j = 0; j < s.center; ++j) {
        Matrix<T> g = Matrix<T>::Zero(s.right_dim(j), s.right_dim(j));
        for (const auto& a : s.tensors[j]) g.noalias() += adj(a) * a;
        err = std::max(err, (g - Matrix<T>::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    for (std::size_t j = s.center + 1; j < s.sites(); ++j) {
        Matrix<T> g = Matrix<T>::Zero(s.left_dim(j), s.left_dim(j));
        for (const auto& a : s.tensors[j]) g.noalias() += a * adj(a);
        err = std::max(err, (g - Matrix<T>::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return err;
}

template <typename T>
void apply_site_operator(MpsState<T>& s, std::size_t site, const Matrix<T>& op) {
    const std::size_t d = s.phys_dim(site);
    if (static_cast<std::size_t>(op.rows()) != d || static_cast<std::size_t>(op.cols()) != d)
        throw ContractViolation("site operator has wrong dimension");
    std::vector<Matrix<T>> out(d, Matrix<T>::Zero(s.left_dim(site), s.right_dim(site)));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            const T v = op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            if (v != T(0)) out[a] += v * s.tensors[site][b];
        }
    s.tensors[site] = std::move(out);
}

template <typename T>
T local_expectation(const MpsState<T>& s, std::size_t site, const Matrix<T>& op) {
    MpsState<T> k = s;
    apply_site_operator(k, site, op);
    return overlap(s, k) / overlap(s, s);
}

namespace {

template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, 1> dense_state(const MpsState<T>& s) {
    // rows: basis index of the sites so far (leftmost most significant), cols: right bond
    Matrix<T> acc = Matrix<T>::Ones(1, 1);
    for (std::size_t j = 0; j < s.sites(); ++j) {
        const Matrix<T> u = s.bases[j].transform().template cast<T>();  // bare x kept
        const Eigen::Index bare = u.rows();
        if (acc.rows() * bare > (Eigen::Index{1} << 26)) throw SizeError("dense expansion of MPS too large");
        Matrix<T> next = Matrix<T>::Zero(acc.rows() * bare, s.right_dim(j));
        for (Eigen::Index n = 0; n < bare; ++n) {
            Matrix<T> an = Matrix<T>::Zero(s.left_dim(j), s.right_dim(j));
            for (std::size_t k = 0; k < s.phys_dim(j); ++k) {
                const T c = u(n, static_cast<Eigen::Index>(k));
                if (c != T(0)) an += c * s.tensors[j][k];
            }
            const Matrix<T> block = acc * an;
            for (Eigen::Index r = 0; r < acc.rows(); ++r) next.row(r * bare + n) = block.row(r);
        }
        acc = std::move(next);
    }
    return acc.col(0);
}

} // namespace

Eigen::VectorXcd to_dense(const ComplexMps& s) { return dense_state(s); }
Eigen::VectorXd to_dense(const RealMps& s) { return dense_state(s); }

MpoSite build_mpo_site(const ChainModel& m, const fock::LocalBasis& basis, std::size_t j, double extra_bias) {
    const std::size_t n = m.sites();
    if (j >= n) throw ContractViolation("MPO site out of range");
    const std::vector<BondTerm> left = j > 0 ? bond_terms(m, j - 1) : std::vector<BondTerm>{};
    const std::vector<BondTerm> right = j + 1 < n ? bond_terms(m, j) : std::vector<BondTerm>{};
    MpoSite w;
    w.rows = 2 + static_cast<int>(left.size());
    w.cols = 2 + static_cast<int>(right.size());
    const int last_row = w.rows - 1, last_col = w.cols - 1;
    const Eigen::MatrixXd id = site_operator(basis, OpKind::Identity);

    Eigen::MatrixXd onsite;
    if (j == m.spin_site()) {
        onsite = 0.5 * (m.bias + extra_bias) * site_operator(basis, OpKind::SigmaZ);
    } else {
        const bath::ChainCoefficients& c = m.bath_of(j) == bath::BathId::X ? m.chain_x : m.chain_z;
        onsite = c.omegas[m.chain_index(j)] * basis.n_hat();
    }
    w.entries.push_back({0, 0, id});
    for (std::size_t k = 0; k < left.size(); ++k)
        w.entries.push_back({static_cast<int>(k) + 1, 0, site_operator(basis, left[k].right)});
    if (onsite.cwiseAbs().maxCoeff() > 0.0) w.entries.push_back({last_row, 0, onsite});
    for (std::size_t k = 0; k < right.size(); ++k)
        w.entries.push_back({last_row, static_cast<int>(k) + 1, right[k].coefficient * site_operator(basis, right[k].left)});
    w.entries.push_back({last_row, last_col, id});
    return w;
}

Mpo build_mpo(const ChainModel& m, const std::vector<fock::LocalBasis>& bases, double extra_bias) {
    if (bases.size() != m.sites()) throw ContractViolation("one local basis per site required");
    Mpo mpo;
    for (std::size_t j = 0; j < m.sites(); ++j) mpo.push_back(build_mpo_site(m, bases[j], j, extra_bias));
    return mpo;
}

template <typename T>
Environment<T> left_boundary(const MpoSite& first) {
    Environment<T> env(static_cast<std::size_t>(first.rows), Matrix<T>::Zero(1, 1));
    env.back()(0, 0) = T(1);
    return env;
}

template <typename T>
Environment<T> right_boundary(const MpoSite& last) {
    Environment<T> env(static_cast<std::size_t>(last.cols), Matrix<T>::Zero(1, 1));
    env.front()(0, 0) = T(1);
    return env;
}

template <typename T>
Environment<T> extend_left(const Environment<T>& left, const std::vector<Matrix<T>>& a, const MpoSite& w) {
    const std::size_t d = a.size();
    const Eigen::Index dr = a.front().cols();
    Environment<T> out(static_cast<std::size_t>(w.cols), Matrix<T>::Zero(dr, dr));
    std::vector<std::vector<Matrix<T>>> la(left.size());  // L[row] A[s]
    for (const auto& e : w.entries) {
        auto& cache = la[static_cast<std::size_t>(e.row)];
        if (cache.empty())
            for (std::size_t s = 0; s < d; ++s) cache.push_back(left[static_cast<std::size_t>(e.row)] * a[s]);
        for (std::size_t sp = 0; sp < d; ++sp) {
            Matrix<T> c = Matrix<T>::Zero(cache[0].rows(), dr);
            bool any = false;
            for (std::size_t s = 0; s < d; ++s) {
                const double v = e.op(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(s));
                if (v != 0.0) {
                    c += v * cache[s];
                    any = true;
                }
            }
            if (any) out[static_cast<std::size_t>(e.col)].noalias() += adj(a[sp]) * c;
        }
    }
    return out;
}

template <typename T>
Environment<T> extend_right(const Environment<T>& right, const std::vector<Matrix<T>>& b, const MpoSite& w) {
    const std::size_t d = b.size();
    const Eigen::Index dl = b.front().rows();
    Environment<T> out(static_cast<std::size_t>(w.rows), Matrix<T>::Zero(dl, dl));
    std::vector<std::vector<Matrix<T>>> br(right.size());  // conj(B[s]) R[col] ... stored as B[s] R^T to keep one layout
    for (const auto& e : w.entries) {
        auto& cache = br[static_cast<std::size_t>(e.col)];
        if (cache.empty())
            for (std::size_t s = 0; s < d; ++s) cache.push_back(b[s] * right[static_cast<std::size_t>(e.col)].transpose());
        for (std::size_t sp = 0; sp < d; ++sp) {
            Matrix<T> c = Matrix<T>::Zero(dl, cache[0].cols());
            bool any = false;
            for (std::size_t s = 0; s < d; ++s) {
                const double v = e.op(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(s));
                if (v != 0.0) {
                    c += v * cache[s];
                    any = true;
                }
            }
            // R_new(a', a) = sum conj(B[s'])(a', b') R(b', b) B[s](a, b)  =  (conj(B[s']) (B[s] R^T)^T)
            if (any) out[static_cast<std::size_t>(e.row)].noalias() += b[sp].conjugate() * c.transpose();
        }
    }
    return out;
}

template <typename T>
double mpo_expectation(const MpsState<T>& s, const Mpo& mpo) {
    if (mpo.size() != s.sites()) throw ContractViolation("MPO length mismatch");
    Environment<T> env = left_boundary<T>(mpo.front());
    for (std::size_t j = 0; j < s.sites(); ++j) env = extend_left(env, s.tensors[j], mpo[j]);
    return real_part(env.front()(0, 0)) / real_part(overlap(s, s));
}

nlohmann::json to_json(const RealMps& s) {
    nlohmann::json j;
    j["format"] = "tbsbm-mps";
    j["center"] = s.center;
    j["bond_dim"] = s.bond_dim;
    j["warmup_bias"] = s.warmup_bias;
    nlohmann::json sites = nlohmann::json::array();
    for (std::size_t k = 0; k < s.sites(); ++k) {
        nlohmann::json site;
        site["phys_dim"] = s.phys_dim(k);
        site["left_dim"] = s.left_dim(k);
        site["right_dim"] = s.right_dim(k);
        const Eigen::MatrixXd& u = s.bases[k].transform();
        site["basis"] = {{"rows", u.rows()}, {"cols", u.cols()}, {"data", std::vector<double>(u.data(), u.data() + u.size())}};
        std::vector<double> data;
        for (const auto& a : s.tensors[k]) data.insert(data.end(), a.data(), a.data() + a.size());
        site["data"] = std::move(data);
        sites.push_back(std::move(site));
    }
    j["sites"] = std::move(sites);
    nlohmann::json spectra = nlohmann::json::array();
    for (const auto& v : s.bond_spectra) spectra.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["bond_spectra"] = std::move(spectra);
    return j;
}

RealMps real_mps_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "tbsbm-mps") throw ContractViolation("not an MPS checkpoint");
    RealMps s;
    s.center = j.at("center").get<std::size_t>();
    s.bond_dim = j.at("bond_dim").get<std::size_t>();
    s.warmup_bias = j.at("warmup_bias").get<double>();
    for (const auto& site : j.at("sites")) {
        const auto& b = site.at("basis");
        const auto rows = b.at("rows").get<Eigen::Index>(), cols = b.at("cols").get<Eigen::Index>();
        const auto udata = b.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(udata.size()) != rows * cols) throw ContractViolation("basis data size mismatch");
        s.bases.emplace_back(Eigen::Map<const Eigen::MatrixXd>(udata.data(), rows, cols));
        const auto d = site.at("phys_dim").get<std::size_t>();
        const auto dl = site.at("left_dim").get<Eigen::Index>(), dr = site.at("right_dim").get<Eigen::Index>();
        const auto data = site.at("data").get<std::vector<double>>();
        if (data.size() != d * static_cast<std::size_t>(dl * dr)) throw ContractViolation("tensor data size mismatch");
        std::vector<Eigen::MatrixXd> t;
        for (std::size_t k = 0; k < d; ++k) t.emplace_back(Eigen::Map<const Eigen::MatrixXd>(data.data() + k * static_cast<std::size_t>(dl * dr), dl, dr));
        s.tensors.push_back(std::move(t));
    }
    for (const auto& v : j.at("bond_spectra")) {
        const auto vals = v.get<std::vector<double>>();
        s.bond_spectra.emplace_back(Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    return s;
}

#define TBSBM_MPS_INSTANTIATE(T)                                                                            \
    template void move_center<T>(MpsState<T>&, std::size_t);                                                \
    template void canonicalize<T>(MpsState<T>&, std::size_t);                                               \
    template T overlap<T>(const MpsState<T>&, const MpsState<T>&);                                          \
    template double norm<T>(const MpsState<T>&);                                                            \
    template double gauge_error<T>(const MpsState<T>&);                                                     \
    template void apply_site_operator<T>(MpsState<T>&, std::size_t, const Matrix<T>&);                      \
    template T local_expectation<T>(const MpsState<T>&, std::size_t, const Matrix<T>&);                     \
    template Environment<T> left_boundary<T>(const MpoSite&);                                               \
    template Environment<T> right_boundary<T>(const MpoSite&);                                              \
    template Environment<T> extend_left<T>(const Environment<T>&, const std::vector<Matrix<T>>&, const MpoSite&); \
    template Environment<T> extend_right<T>(const Environment<T>&, const std::vector<Matrix<T>>&, const MpoSite&); \
    template double mpo_expectation<T>(const MpsState<T>&, const Mpo&);

TBSBM_MPS_INSTANTIATE(double)
TBSBM_MPS_INSTANTIATE(complex)

#undef TBSBM_MPS_INSTANTIATE

} // namespace tbsbm::mps
