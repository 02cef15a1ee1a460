// fock_algebra.hpp - truncated single-mode operators, coherent states and local bases

#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace tbsbm::fock {

using complex = std::complex<double>;

struct LadderOps {
    Eigen::MatrixXd b;
    Eigen::MatrixXd b_dagger;
    Eigen::MatrixXd n_hat;
};

// b|n> = sqrt(n)|n-1> on span{|0>, ..., |dim-1>}.
LadderOps ladder_matrices(std::size_t dim);

// diag((-1)^n)
Eigen::MatrixXd local_parity(std::size_t dim);

// Projector onto odd occupation numbers.
Eigen::MatrixXd odd_projector(std::size_t dim);

// Single-mode Hilbert space: a truncated Fock space of size bare_dim() together with an
// isometry whose columns span the retained (possibly optimised) basis.
class LocalBasis {
public:
    LocalBasis() = default;
    explicit LocalBasis(Eigen::MatrixXd transform);

    static LocalBasis bare(std::size_t dim);
    // First `kept` Fock states of a bare space of size `bare_dim`.
    static LocalBasis fock_truncated(std::size_t bare_dim, std::size_t kept);

    std::size_t bare_dim() const noexcept { return static_cast<std::size_t>(transform_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(transform_.cols()); }
    const Eigen::MatrixXd& transform() const noexcept { return transform_; }

    bool is_identity(double tol = 0.0) const;
    // max |U^T U - I|
    double orthonormality_error() const;

    // U^T op U for an operator given in the bare basis.
    Eigen::MatrixXd project(const Eigen::MatrixXd& bare_op) const;

    // Common operators expressed in the retained basis.
    Eigen::MatrixXd b() const;
    Eigen::MatrixXd b_dagger() const;
    Eigen::MatrixXd n_hat() const;
    Eigen::MatrixXd position() const; // (b + b^dagger) / sqrt(2)

private:
    Eigen::MatrixXd transform_;
};

// Truncated coherent state D(f)|0> built from the normalised series e^{-|f|^2/2} f^n / sqrt(n!).
class CoherentState {
public:
    static constexpr double default_truncation_tol = 1e-10;

    CoherentState(complex displacement, std::size_t dim, double truncation_tol = default_truncation_tol);

    complex displacement() const noexcept { return displacement_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
    const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    // squared norm of the truncated expansion (exact state has norm 1)
    double captured_norm() const noexcept { return captured_norm_; }
    bool truncation_flagged() const noexcept { return flagged_; }

private:
    complex displacement_;
    Eigen::VectorXcd amplitudes_;
    double captured_norm_{1.0};
    bool flagged_{false};
};

// <f|g> = exp(-|f|^2/2 - |g|^2/2 + conj(f) g), untruncated.
complex coherent_overlap(complex f, complex g);

// <psi| (b + b^dagger) |psi> / sqrt(2), psi given in the retained basis of `basis`.
// Throws ContractViolation when psi is not normalised to 1e-10.
double displacement_expectation(const Eigen::VectorXcd& psi, const LocalBasis& basis);

} // namespace tbsbm::fock
