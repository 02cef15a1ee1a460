// linalg.hpp - Krylov eigensolvers for symmetric operators given as callbacks

#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace tbsbm::linalg {

struct EigenSolverOptions {
    double tolerance{1e-12};      // residual norm relative to max(1, |E|)
    int max_krylov{60};           // basis size before a thick restart
    int max_restarts{400};
    std::uint64_t seed{0x5eedULL};
};

struct EigenPairs {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
    Eigen::VectorXd residuals;
    bool converged{false};
};

using BlockOperator = std::function<void(const Eigen::MatrixXd& in, Eigen::MatrixXd& out)>;
using VectorOperator = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

// Lowest `count` eigenpairs of a real symmetric operator by block Lanczos with full
// reorthogonalisation and explicit restarts. Degenerate eigenvalues are resolved as long
// as their multiplicity does not exceed `count`.
EigenPairs lowest_eigenpairs(const BlockOperator& apply, Eigen::Index dim, int count,
                             const EigenSolverOptions& opts = {});

// Ground state of a symmetric operator starting from `guess` (single-vector Lanczos).
EigenPairs lanczos_ground(const VectorOperator& apply, const Eigen::VectorXd& guess, double tolerance = 1e-12,
                          int max_krylov = 40, int max_restarts = 50);

} // namespace tbsbm::linalg
