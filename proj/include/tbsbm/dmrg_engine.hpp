// dmrg_engine.hpp - two-site DMRG with restricted, asymmetric and symmetric optimized boson bases

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tbsbm/mps.hpp"
#include "tbsbm/observables.hpp"

namespace tbsbm::dmrg {

using mps::ChainModel;
using mps::RealMps;

enum class BasisPolicy { Restricted, AOPB, SOPB };

std::string to_string(BasisPolicy policy);
BasisPolicy policy_from_string(const std::string& name);

struct SopbConfig {
    double a{0.5};
    std::size_t n_bare{16};
    std::size_t n_opt{8};
    int sweeps{60};
    double convergence_tol{1e-10};  // relative energy change over one full sweep

    // Throws ContractViolation unless 0 <= a <= 1 and 1 <= n_opt <= n_bare.
    void validate() const;
};

struct DmrgConfig {
    BasisPolicy policy{BasisPolicy::SOPB};
    std::size_t bond_dim{64};
    SopbConfig basis{};
    double warmup_bias{1e-8};  // sign selects the doublet member
    int min_sweeps{2};
    double truncation_threshold{1e-8};
    double instability_tol{1e-6};  // allowed energy rise between optimization passes, relative
    double lanczos_tol{1e-12};
    int lanczos_krylov{40};
    int lanczos_restarts{4};       // per bond update; later sweeps keep refining
    double guess_noise{1e-3};      // relative random admixture to the two-site guesses of the first warmup sweep
    std::size_t initial_bond{8};
    std::uint64_t seed{1};

    void validate() const;
};

struct SweepRecord {
    std::string stage;  // "warmup" or "production"
    int sweep{0};
    double energy{0.0};
    double max_truncated_weight{0.0};
    double max_discarded_basis_weight{0.0};
};

struct DmrgResult {
    RealMps state;
    ObservableReport report;
    std::vector<SweepRecord> history;
    bool converged{false};
    double max_truncated_weight{0.0};  // final sweep
};

struct BasisUpdate {
    fock::LocalBasis basis;
    Eigen::VectorXd weights;  // kept eigenvalues of the (mixed) density matrix, descending
    double discarded_weight{0.0};
    std::vector<int> parities;  // +1 / -1 when the vector has definite parity, 0 otherwise
};

// Top-n_opt eigenvectors of a rho + (1 - a) P rho P on a bare Fock space; a = 1 is the
// asymmetric (plain) optimization. Ties at equal weight keep the lower <n>, then even parity.
BasisUpdate optimize_basis(const Eigen::MatrixXd& rho_bare, double a, std::size_t n_opt);

// Reduced density matrix of one site, in the site's retained basis.
Eigen::MatrixXd site_density_matrix(const RealMps& state, std::size_t site);

// Both require the site to hold its bare basis.
BasisUpdate optimize_site_aopb(const RealMps& state, std::size_t site, std::size_t n_opt);
BasisUpdate optimize_site_sopb(const RealMps& state, std::size_t site, const SopbConfig& cfg);

// Restricted-basis sweeps with the warmup bias until the energy settles.
DmrgResult warmup_restricted(const ChainModel& model, const DmrgConfig& cfg);

// Warmup followed by production sweeps of the chosen policy with the warmup bias removed.
DmrgResult ground_state(const ChainModel& model, const DmrgConfig& cfg);

// E, sigma^z, sigma^x and X_i on every boson site (no order parameter).
ObservableReport measure(const ChainModel& model, const RealMps& state);

nlohmann::json checkpoint(const ChainModel& model, const DmrgConfig& cfg, const DmrgResult& result);

} // namespace tbsbm::dmrg
