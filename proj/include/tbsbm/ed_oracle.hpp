// ed_oracle.hpp - dense / sparse exact diagonalisation of small two-bath models
//
// Basis ordering follows the chain layout used by the MPS solver,
//   x_{Lx-1} ... x_1 x_0  spin  z_0 z_1 ... z_{Lz-1},
// with the leftmost factor most significant. Spin index 0 is sigma^z = +1.

#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "json.hpp"
#include "tbsbm/bath_chain.hpp"
#include "tbsbm/observables.hpp"

namespace tbsbm::ed {

struct DenseModel {
    bath::ChainCoefficients chain_z;
    bath::ChainCoefficients chain_x;
    std::size_t n_ph{4};
    double bias{0.0};  // adds (bias / 2) sigma^z
    std::size_t dimension_cap{std::size_t{1} << 22};

    std::size_t sites() const noexcept { return chain_x.length() + 1 + chain_z.length(); }
    std::size_t spin_site() const noexcept { return chain_x.length(); }
    // Throws SizeError when 2 n_ph^(Lz+Lx) exceeds the cap.
    std::size_t dimension() const;
    void validate() const;
};

// One-site chain with coupling prefactor g, i.e. a term g sigma (b + b^dagger).
bath::ChainCoefficients single_mode_chain(double omega, double coupling);

struct SpectrumResult {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // columns
    double degeneracy_gap{0.0};
};

struct SolveOptions {
    std::size_t dense_limit{4096};
    double tolerance{1e-12};
    int max_krylov{60};
};

Eigen::SparseMatrix<double> build_sparse_hamiltonian(const DenseModel& model);
Eigen::MatrixXd build_hamiltonian(const DenseModel& model);

// Lowest k >= 2 eigenpairs.
SpectrumResult ground_state(const DenseModel& model, int k = 2, const SolveOptions& opts = {});

nlohmann::json to_json(const SpectrumResult& result, const nlohmann::json& params = nlohmann::json::object());

// Operators on the full model space.
enum class Pauli { I, X, Y, Z };
using SparseComplex = Eigen::SparseMatrix<std::complex<double>>;
SparseComplex spin_operator(const DenseModel& model, Pauli which);
// exp(i pi sum_l n_l) over one bath (diagonal, +-1).
Eigen::VectorXd bath_parity_diagonal(const DenseModel& model, bath::BathId bath);

// Site index in the chain layout of chain site `index` of `bath`.
std::size_t layout_site(const DenseModel& model, bath::BathId bath, std::size_t index);
// Applies a local operator on layout site `site` to a full state vector.
Eigen::VectorXcd apply_local(const DenseModel& model, std::size_t site, const Eigen::MatrixXcd& op,
                             const Eigen::VectorXcd& state);

// Expectation values of a normalised dense state: energy, sigma^z, sigma^x, X_i per site, O_z, O_x, zeta.
ObservableReport dense_observables(const DenseModel& model, const Eigen::VectorXcd& state);
ObservableReport dense_observables(const DenseModel& model, const Eigen::VectorXd& state);

struct PopulationGrid {
    std::vector<double> xs;
    std::vector<double> zs;

    static PopulationGrid uniform(double x_min, double x_max, std::size_t nx, double z_min, double z_max, std::size_t nz);
};

// P(x, z) sampled on a rectangular grid; values(iz, ix).
struct PopulationField {
    std::vector<double> xs;
    std::vector<double> zs;
    Eigen::MatrixXd values;
    double integral{0.0};
    double centroid_x{0.0};
    double centroid_z{0.0};
    bool normalization_warning{false};

    double centroid_distance() const;
};

// Harmonic-oscillator eigenfunction phi_n(x) for unit frequency, x = (b + b^dagger)/sqrt(2).
Eigen::MatrixXd hermite_functions(std::size_t n_max, const std::vector<double>& xs);

// Trapezoid integral and centroid of a sampled field; flags |integral - 1| > 1%.
void finalize_population(PopulationField& field);

// Spin-traced position density |psi_+(x,z)|^2 + |psi_-(x,z)|^2 of a single-mode-per-bath state.
PopulationField single_mode_population(const DenseModel& model, const Eigen::VectorXcd& state, const PopulationGrid& grid);

// CSV rows (x, z, p).
void write_population_csv(std::ostream& out, const PopulationField& field);

} // namespace tbsbm::ed
