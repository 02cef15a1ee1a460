// variational.hpp - multi-coherent-state ansatz for the two-bath model
//
//   |psi> = |+> sum_n A_n |f_n> + |-> sum_n B_n |g_n>,   |f_n> = prod_l D(f_{n,l}) |0>
//
// with 2M discretized modes: l < M belong to the z bath, l >= M to the x bath. The Hamiltonian is
//   H = sum_l w_l b_l^dagger b_l + sigma^z sum_{l<M} (lambda_l / 2)(b_l + b_l^dagger)
//     + sigma^x sum_{l>=M} (lambda_l / 2)(b_l + b_l^dagger) + (bias / 2) sigma^z.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tbsbm/bath_chain.hpp"
#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/observables.hpp"

namespace tbsbm::variational {

using complex = std::complex<double>;

struct ModeGrid {
    std::size_t modes_per_bath{0};
    Eigen::VectorXd omegas;   // 2M
    Eigen::VectorXd lambdas;  // 2M
    double bias{0.0};

    std::size_t total_modes() const noexcept { return static_cast<std::size_t>(omegas.size()); }
    // true when the z and x grids share frequencies mode by mode
    bool paired(double tol = 1e-14) const;
    void validate() const;
};

struct ModeGridOptions {
    std::size_t modes{40};
    double lower{1e-4};  // in units of omega_c
    double upper{10.0};
};

// Log bins on [lower, upper] omega_c; lambda_l^2 = int_bin J / pi, w_l = J-weighted bin mean.
ModeGrid discretize_baths(const bath::BathSpec& z, const bath::BathSpec& x, const ModeGridOptions& opts = {});

// pi sum lambda_l^2 over one bath, and the same weight integrated over [0, inf).
std::pair<double, double> discretization_check(const ModeGrid& grid, const bath::BathSpec& spec);

// One mode per bath with coupling term (lambda / 2) sigma (b + b^dagger).
ModeGrid single_mode_grid(double omega, double lambda_z, double lambda_x, double bias = 0.0);

struct VariationalState {
    Eigen::VectorXcd a;  // N
    Eigen::VectorXcd b;  // N
    Eigen::MatrixXcd f;  // N x 2M
    Eigen::MatrixXcd g;  // N x 2M

    std::size_t terms() const noexcept { return static_cast<std::size_t>(a.size()); }
    std::size_t total_modes() const noexcept { return static_cast<std::size_t>(f.cols()); }
    void validate(const ModeGrid& grid) const;
};

struct EnergyNorm {
    double energy{0.0};
    double norm{0.0};  // D = <psi|psi>
};

// Closed-form coherent-state evaluation. Throws NumericalInstability when D < 1e-14.
EnergyNorm energy_and_norm(const VariationalState& state, const ModeGrid& grid);

// Real parameter vector: [Re a, Im a, Re b, Im b, Re f, Im f, Re g, Im g], tables row-major by term.
Eigen::VectorXd pack(const VariationalState& state);
VariationalState unpack(const Eigen::VectorXd& params, std::size_t terms, std::size_t total_modes);

// d<H>/dxi - E d<D>/dxi for every real parameter, E = <H>/D of the state itself.
Eigen::VectorXd residual(const VariationalState& state, const ModeGrid& grid);

// <H> - energy <D> for a fixed energy, as a function of the real parameters (finite-difference target).
double shifted_functional(const VariationalState& state, const ModeGrid& grid, double energy);

struct RelaxSchedule {
    int restarts{16};                 // the input trajectory counts as one
    int fixed_point_iterations{200};
    double damping{0.3};
    int max_polish_iterations{4000};
    int newton_steps{4};              // finite-difference Hessian steps on the winner; L-BFGS alone stalls near 1e-9
    double residual_tol{1e-10};
    double seed_scale{1.0};           // spread of random restarts around the decoupled displacement
    std::uint64_t seed{7};
};

struct RelaxResult {
    VariationalState state;
    double energy{0.0};
    double residual{0.0};  // max |residual| with D = 1
    bool converged{false};
};

// Optimal weights for fixed displacements (generalized eigenproblem, overlap-regularized).
VariationalState solve_weights(const VariationalState& state, const ModeGrid& grid);

RelaxResult relax(const VariationalState& state, const ModeGrid& grid, const RelaxSchedule& schedule = {});

VariationalState random_state(const ModeGrid& grid, std::size_t terms, std::uint64_t seed, double scale = 1.0);

// Appends zero-weight terms; the represented state is unchanged.
VariationalState embed(const VariationalState& state, std::size_t terms, std::uint64_t seed);

// Exact action of exp(i theta S), S = sigma^y / 2 + i sum_l (b_{x,l}^dagger b_{z,l} - b_{x,l} b_{z,l}^dagger).
// Produces 2N terms. Throws SizeError for unpaired grids.
VariationalState rotate(const VariationalState& state, const ModeGrid& grid, double theta);

// Keeps the `terms` largest-weight contributions of each branch.
VariationalState compress(const VariationalState& state, std::size_t terms);

struct RotationalResult {
    double theta{0.0};
    RelaxResult best;
    std::vector<double> energies;  // per grid angle
};

// Rotate, compress, re-relax at every angle; the lowest energy wins, ties go to the smaller angle.
RotationalResult rotational_optimization(const VariationalState& state, const ModeGrid& grid, const std::vector<double>& thetas,
                                         const RelaxSchedule& schedule = {});

std::vector<double> default_theta_grid(std::size_t points = 400);

struct SpinExpectations {
    double sigma_z{0.0};
    double sigma_x{0.0};
};
SpinExpectations spin_expectations(const VariationalState& state, const ModeGrid& grid);

// <O_z>, <O_x> using P|f> = |-f> mode by mode.
OrderParameterReport order_parameter(const VariationalState& state, const ModeGrid& grid);

struct ZetaScan {
    std::vector<double> thetas;
    std::vector<double> o_z;
    std::vector<double> o_x;
    std::vector<double> zeta;
    std::vector<double> energies;
};
ZetaScan zeta_scan(const VariationalState& state, const ModeGrid& grid, const std::vector<double>& thetas);

// Local maxima of zeta (periodic ends included) above `min_height`.
std::vector<double> zeta_peaks(const ZetaScan& scan, double min_height = 0.5);

// Mean coordinate of each bath's coupled mode, sum_l lambda_l <x_l> / sqrt(sum lambda_l^2), x = (b + b^dagger)/sqrt(2).
std::pair<double, double> average_displacements(const VariationalState& state, const ModeGrid& grid);

// Spin-traced density over the coordinates of modes (mode_x, mode_z), other modes integrated out, unit frequency.
ed::PopulationField phonon_population(const VariationalState& state, const ed::PopulationGrid& grid, std::size_t mode_x,
                                      std::size_t mode_z);

ObservableReport report(const VariationalState& state, const ModeGrid& grid);

nlohmann::json to_json(const VariationalState& state);
VariationalState state_from_json(const nlohmann::json& j);

} // namespace tbsbm::variational
