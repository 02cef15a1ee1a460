// mps.hpp - open-boundary matrix-product states and operators on the two-chain layout
//
// Site j holds matrices A_j[sigma] of shape (D_{j-1} x D_j). The local space of every boson
// site is the retained span of its LocalBasis; the spin site carries a trivial 2-dim basis.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tbsbm/bath_chain.hpp"
#include "tbsbm/fock_algebra.hpp"

namespace tbsbm::mps {

using complex = std::complex<double>;
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Spin coupled to two chains. Layout: [x_{Lx-1} .. x_0, spin, z_0 .. z_{Lz-1}].
struct ChainModel {
    bath::ChainCoefficients chain_z;
    bath::ChainCoefficients chain_x;
    double bias{0.0};  // physical (bias / 2) sigma^z

    std::size_t sites() const noexcept { return chain_x.length() + 1 + chain_z.length(); }
    std::size_t spin_site() const noexcept { return chain_x.length(); }
    bool is_boson(std::size_t site) const noexcept { return site != spin_site(); }
    // Bath owning a boson site, and its index along that chain.
    bath::BathId bath_of(std::size_t site) const;
    std::size_t chain_index(std::size_t site) const;
    std::size_t layout_site(bath::BathId bath, std::size_t index) const;
    void validate() const;
};

template <typename T>
struct MpsState {
    std::vector<std::vector<Matrix<T>>> tensors;  // tensors[j][sigma]
    std::vector<fock::LocalBasis> bases;
    std::size_t center{0};
    std::size_t bond_dim{0};
    double warmup_bias{0.0};
    std::vector<Eigen::VectorXd> bond_spectra;  // singular values on bond (j, j+1)

    std::size_t sites() const noexcept { return tensors.size(); }
    std::size_t phys_dim(std::size_t j) const noexcept { return tensors[j].size(); }
    Eigen::Index left_dim(std::size_t j) const { return tensors[j].front().rows(); }
    Eigen::Index right_dim(std::size_t j) const { return tensors[j].front().cols(); }
};

using RealMps = MpsState<double>;
using ComplexMps = MpsState<complex>;

ComplexMps to_complex(const RealMps& state);

// Random state with bond dimension min(bond, exact bound), right-canonical with center 0.
RealMps random_mps(const std::vector<fock::LocalBasis>& bases, std::size_t bond, std::uint64_t seed);

// Product state with one local vector per site (retained-basis coordinates).
RealMps product_mps(const std::vector<fock::LocalBasis>& bases, const std::vector<Eigen::VectorXd>& locals);

// Gauge moves. Both preserve the represented state exactly.
template <typename T>
void move_center(MpsState<T>& state, std::size_t target);
template <typename T>
void canonicalize(MpsState<T>& state, std::size_t center);

template <typename T>
T overlap(const MpsState<T>& bra, const MpsState<T>& ket);
template <typename T>
double norm(const MpsState<T>& state);

// max over sites left of the center of |sum A^dagger A - I| and right of it of |sum A A^dagger - I|.
template <typename T>
double gauge_error(const MpsState<T>& state);

// A_j[s'] <- sum_s op(s', s) A_j[s]; op is square on the retained space.
template <typename T>
void apply_site_operator(MpsState<T>& state, std::size_t site, const Matrix<T>& op);

// <psi| op_site |psi> / <psi|psi> for one local operator.
template <typename T>
T local_expectation(const MpsState<T>& state, std::size_t site, const Matrix<T>& op);

// Dense state vector in the bare Fock product basis (leftmost site most significant).
Eigen::VectorXcd to_dense(const ComplexMps& state);
Eigen::VectorXd to_dense(const RealMps& state);

// Sparse-entry MPO site: W(row, col) = op, rows/cols index the left/right MPO bonds.
struct MpoEntry {
    int row;
    int col;
    Eigen::MatrixXd op;
};

struct MpoSite {
    int rows{0};
    int cols{0};
    std::vector<MpoEntry> entries;
};

using Mpo = std::vector<MpoSite>;

// Hamiltonian MPO in the current local bases. `extra_bias` adds (extra_bias / 2) sigma^z on top of
// the model bias (used for the warmup symmetry-breaking field).
Mpo build_mpo(const ChainModel& model, const std::vector<fock::LocalBasis>& bases, double extra_bias = 0.0);
MpoSite build_mpo_site(const ChainModel& model, const fock::LocalBasis& basis, std::size_t site, double extra_bias = 0.0);

// Environment blocks: env[a] is (D x D) for MPO bond index a.
template <typename T>
using Environment = std::vector<Matrix<T>>;

template <typename T>
Environment<T> left_boundary(const MpoSite& first);
template <typename T>
Environment<T> right_boundary(const MpoSite& last);
template <typename T>
Environment<T> extend_left(const Environment<T>& left, const std::vector<Matrix<T>>& a, const MpoSite& w);
template <typename T>
Environment<T> extend_right(const Environment<T>& right, const std::vector<Matrix<T>>& b, const MpoSite& w);

// <psi|H|psi> / <psi|psi>.
template <typename T>
double mpo_expectation(const MpsState<T>& state, const Mpo& mpo);

// Checkpoint of a real state, including bases and bond spectra.
nlohmann::json to_json(const RealMps& state);
RealMps real_mps_from_json(const nlohmann::json& j);

} // namespace tbsbm::mps
