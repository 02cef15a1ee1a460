// symmetry_probe.hpp - bath parities, incremental parity rotations and the order parameter

#pragma once

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbsbm/ed_oracle.hpp"
#include "tbsbm/mps.hpp"
#include "tbsbm/observables.hpp"

namespace tbsbm::symmetry {

enum class SiteSet { XBath, ZBath, All };

struct RotationOptions {
    double dtheta{std::numbers::pi / 200.0};
    // max |q - round(q)| allowed for the odd-weight eigenvalues q of a site; infinity disables the check
    double classification_tol{0.1};
};

// Odd-occupation weight Q = U^T Pi_odd U of a site, diagonalised once and reused for every step.
// In a basis of definite-parity vectors its eigenvalues are exactly 0 and 1.
struct ParityGenerator {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd weights;
    double classification_residual{0.0};
};

ParityGenerator parity_generator(const fock::LocalBasis& basis);

// exp(i dtheta Q): unitary, and equal to P_i(dtheta) on definite-parity bases.
Eigen::MatrixXcd parity_step_matrix(const ParityGenerator& gen, double dtheta);

// One step on one site. Throws NumericalInstability when the classification residual exceeds the tolerance.
void incremental_parity_step(mps::ComplexMps& state, std::size_t site, double dtheta, const RotationOptions& opts = {});

// Accumulates theta / dtheta steps on every selected boson site. theta must be a multiple of dtheta.
void rotate_all_sites(mps::ComplexMps& state, const mps::ChainModel& model, double theta, SiteSet sites,
                      const RotationOptions& opts = {});
Eigen::VectorXcd rotate_all_sites(const ed::DenseModel& model, const Eigen::VectorXcd& state, double theta, SiteSet sites,
                                  const RotationOptions& opts = {});

// <O_z> from sigma^z times the pi-rotation of the x bath, <O_x> from sigma^x times that of the z bath.
// A 2 pi calibration scan supplies calibration_deviation; above 1e-4 the report is low-confidence.
OrderParameterReport order_parameter(const mps::ChainModel& model, const mps::RealMps& state, const RotationOptions& opts = {});
OrderParameterReport order_parameter(const mps::ChainModel& model, const mps::ComplexMps& state,
                                     const RotationOptions& opts = {});
OrderParameterReport order_parameter(const ed::DenseModel& model, const Eigen::VectorXcd& state, const RotationOptions& opts = {});

struct RotationScan {
    std::vector<double> thetas;
    std::vector<std::size_t> sites;  // layout indices of the tracked sites
    Eigen::MatrixXd displacements;   // (theta, tracked site)
    std::vector<double> energies;
    double return_deviation{0.0};    // max_i |X_i(2 pi) - X_i(0)|
};

// Uniform grid 0, ..., 2 pi with `intervals` steps; each interval must hold a whole number of dtheta steps.
std::vector<double> theta_grid(std::size_t intervals);

RotationScan displacement_rotation_scan(const mps::ChainModel& model, const mps::RealMps& state,
                                        const std::vector<double>& thetas, const std::vector<std::size_t>& tracked,
                                        SiteSet rotate = SiteSet::All, const RotationOptions& opts = {});

// All boson sites in layout order.
std::vector<std::size_t> boson_sites(const mps::ChainModel& model);

// Rows (theta, site, X, energy).
void write_rotation_csv(std::ostream& out, const RotationScan& scan);

struct GroupReport {
    bool closed{false};                 // every product of two elements is an element
    double max_product_error{0.0};
    double oy_identity_error{0.0};      // |O_y^+ - O_z^+ O_x^+|_max
    double anticommutator_error{0.0};   // |O_z O_x + O_x O_z|_max
    double commutator_h_oz{0.0};
    double commutator_h_ox{0.0};
    double commutator_h_oy{0.0};
    std::vector<std::string> labels;    // I+, I-, Oz+, Oz-, Ox+, Ox-, Oy+, Oy-
    std::vector<std::vector<int>> table;  // index of labels[i] * labels[j], -1 if not found
};

// Dense check of the eight-element group and its commutation with H (dimension <= 2^16).
GroupReport verify_group(const ed::DenseModel& model);

} // namespace tbsbm::symmetry
