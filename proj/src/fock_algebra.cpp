#include "tbsbm/fock_algebra.hpp"

#include <cmath>
#include <numbers>

#include "tbsbm/errors.hpp"

namespace tbsbm::fock {

LadderOps ladder_matrices(std::size_t dim) {
    if (dim == 0) throw ContractViolation("Fock dimension must be at least 1");
    const auto d = static_cast<Eigen::Index>(dim);
    LadderOps ops;
    ops.b = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index n = 1; n < d; ++n) ops.b(n - 1, n) = std::sqrt(static_cast<double>(n));
    ops.b_dagger = ops.b.transpose();
    ops.n_hat = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) ops.n_hat(n, n) = static_cast<double>(n);
    return ops;
}

Eigen::MatrixXd local_parity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
    return p;
}

Eigen::MatrixXd odd_projector(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index n = 1; n < d; n += 2) p(n, n) = 1.0;
    return p;
}

LocalBasis::LocalBasis(Eigen::MatrixXd transform) : transform_(std::move(transform)) {
    if (transform_.cols() == 0 || transform_.cols() > transform_.rows())
        throw ContractViolation("local basis needs 1 <= kept <= bare dimension");
}

LocalBasis LocalBasis::bare(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return LocalBasis(Eigen::MatrixXd::Identity(d, d));
}

LocalBasis LocalBasis::fock_truncated(std::size_t bare_dim, std::size_t kept) {
    return LocalBasis(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(bare_dim), static_cast<Eigen::Index>(kept)));
}

bool LocalBasis::is_identity(double tol) const {
    if (transform_.rows() != transform_.cols()) return false;
    return (transform_ - Eigen::MatrixXd::Identity(transform_.rows(), transform_.cols())).cwiseAbs().maxCoeff() <= tol;
}

double LocalBasis::orthonormality_error() const {
    const Eigen::MatrixXd g = transform_.transpose() * transform_;
    return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd LocalBasis::project(const Eigen::MatrixXd& bare_op) const {
    return transform_.transpose() * bare_op * transform_;
}

Eigen::MatrixXd LocalBasis::b() const { return project(ladder_matrices(bare_dim()).b); }
Eigen::MatrixXd LocalBasis::b_dagger() const { return project(ladder_matrices(bare_dim()).b_dagger); }
Eigen::MatrixXd LocalBasis::n_hat() const { return project(ladder_matrices(bare_dim()).n_hat); }

Eigen::MatrixXd LocalBasis::position() const {
    const LadderOps ops = ladder_matrices(bare_dim());
    return project((ops.b + ops.b_dagger) / std::numbers::sqrt2);
}

CoherentState::CoherentState(complex displacement, std::size_t dim, double truncation_tol)
    : displacement_(displacement), amplitudes_(static_cast<Eigen::Index>(dim)) {
    if (dim == 0) throw ContractViolation("coherent state needs dim >= 1");
    const double mag2 = std::norm(displacement);
    complex term = std::exp(-0.5 * mag2);
    double norm2 = 0.0;
    for (std::size_t n = 0; n < dim; ++n) {
        if (n > 0) term *= displacement / std::sqrt(static_cast<double>(n));
        amplitudes_[static_cast<Eigen::Index>(n)] = term;
        norm2 += std::norm(term);
    }
    captured_norm_ = norm2;
    flagged_ = norm2 < 1.0 - truncation_tol;
}

complex coherent_overlap(complex f, complex g) {
    return std::exp(-0.5 * std::norm(f) - 0.5 * std::norm(g) + std::conj(f) * g);
}

double displacement_expectation(const Eigen::VectorXcd& psi, const LocalBasis& basis) {
    if (static_cast<std::size_t>(psi.size()) != basis.dim())
        throw ContractViolation("state dimension does not match local basis");
    if (std::abs(psi.squaredNorm() - 1.0) > 1e-10) throw ContractViolation("state must be normalised");
    const Eigen::MatrixXd x = basis.position();
    return (psi.adjoint() * x.cast<complex>() * psi)(0, 0).real();
}

} // namespace tbsbm::fock
