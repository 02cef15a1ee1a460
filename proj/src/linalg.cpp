#include "tbsbm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tbsbm/errors.hpp"

namespace tbsbm::linalg {

namespace {

// Orthonormalise the columns of `block` against `basis` (first `used` columns) and among
// themselves. Columns that collapse are replaced by random directions.
void orthonormalise_block(const Eigen::MatrixXd& basis, Eigen::Index used, Eigen::MatrixXd& block,
                          std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
        for (int attempt = 0; attempt < 5; ++attempt) {
            const double before = block.col(c).norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (used > 0) block.col(c) -= basis.leftCols(used) * (basis.leftCols(used).transpose() * block.col(c));
                if (c > 0) block.col(c) -= block.leftCols(c) * (block.leftCols(c).transpose() * block.col(c));
            }
            const double after = block.col(c).norm();
            if (after > 1e-10 * std::max(before, 1e-300) && after > 1e-300) {
                block.col(c) /= after;
                break;
            }
            for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, c) = gauss(rng);
        }
    }
}

} // namespace

EigenPairs lowest_eigenpairs(const BlockOperator& apply, Eigen::Index dim, int count,
                             const EigenSolverOptions& opts) {
    if (count < 1 || count > dim) throw ContractViolation("requested eigenpair count out of range");
    const Eigen::Index p = count;
    const Eigen::Index max_cols = std::min<Eigen::Index>(std::max<Eigen::Index>(opts.max_krylov, 4 * p), dim);
    // thick restart keeps this many Ritz vectors
    const Eigen::Index keep = std::min<Eigen::Index>(std::max<Eigen::Index>(2 * p, max_cols / 2), max_cols - p);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;

    Eigen::MatrixXd v(dim, max_cols), hv(dim, max_cols);
    Eigen::Index used = 0;
    Eigen::MatrixXd block(dim, p);
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = gauss(rng);

    auto tolerance_for = [&](double value) { return opts.tolerance * std::max(1.0, std::abs(value)); };

    EigenPairs best;
    for (int restart = 0; restart <= opts.max_restarts; ++restart) {
        while (used < max_cols) {
            orthonormalise_block(v, used, block, rng);
            const Eigen::Index take = std::min<Eigen::Index>(block.cols(), max_cols - used);
            v.middleCols(used, take) = block.leftCols(take);
            Eigen::MatrixXd out(dim, take);
            apply(v.middleCols(used, take), out);
            hv.middleCols(used, take) = out;
            used += take;
            block = out;
        }

        Eigen::MatrixXd t = v.leftCols(used).transpose() * hv.leftCols(used);
        t = 0.5 * (t + t.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        best.values = es.eigenvalues().head(p);
        best.vectors = v.leftCols(used) * es.eigenvectors().leftCols(p);
        const Eigen::MatrixXd hy = hv.leftCols(used) * es.eigenvectors().leftCols(p);
        const Eigen::MatrixXd r = hy - best.vectors * best.values.asDiagonal();
        best.residuals.resize(p);
        best.converged = true;
        for (Eigen::Index c = 0; c < p; ++c) {
            best.residuals(c) = r.col(c).norm();
            best.converged = best.converged && best.residuals(c) <= tolerance_for(best.values(c));
        }
        if (best.converged || used >= dim) {
            best.converged = true;
            break;
        }
        const Eigen::MatrixXd s = es.eigenvectors().leftCols(keep);
        const Eigen::MatrixXd nv = v.leftCols(used) * s;
        const Eigen::MatrixXd nhv = hv.leftCols(used) * s;
        v.leftCols(keep) = nv;
        hv.leftCols(keep) = nhv;
        used = keep;
        block = r;
    }
    for (Eigen::Index c = 0; c < best.vectors.cols(); ++c) best.vectors.col(c).normalize();
    return best;
}

EigenPairs lanczos_ground(const VectorOperator& apply, const Eigen::VectorXd& guess, double tolerance,
                          int max_krylov, int max_restarts) {
    const Eigen::Index dim = guess.size();
    if (dim == 0) throw ContractViolation("empty Lanczos problem");
    Eigen::VectorXd x = guess;
    if (x.norm() < 1e-300) x = Eigen::VectorXd::Ones(dim);
    x.normalize();

    EigenPairs res;
    const Eigen::Index kmax = std::min<Eigen::Index>(max_krylov, dim);
    for (int restart = 0; restart <= max_restarts; ++restart) {
        Eigen::MatrixXd v(dim, kmax);
        Eigen::VectorXd alpha(kmax), beta(kmax);
        v.col(0) = x;
        Eigen::VectorXd w(dim);
        Eigen::Index k = 0;
        double theta = 0.0;
        Eigen::VectorXd ritz;
        bool done = false;
        for (; k < kmax; ++k) {
            apply(v.col(k), w);
            alpha(k) = v.col(k).dot(w);
            // full reorthogonalisation, twice
            for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(k + 1) * (v.leftCols(k + 1).transpose() * w);
            beta(k) = w.norm();

            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k + 1, k + 1);
            for (Eigen::Index i = 0; i <= k; ++i) {
                t(i, i) = alpha(i);
                if (i > 0) t(i, i - 1) = t(i - 1, i) = beta(i - 1);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            theta = es.eigenvalues()(0);
            ritz = es.eigenvectors().col(0);
            const double resid = std::abs(beta(k) * ritz(k));
            if (resid <= tolerance * std::max(1.0, std::abs(theta)) || beta(k) < 1e-14 || k + 1 == dim) {
                done = true;
                ++k;
                break;
            }
            if (k + 1 < kmax) v.col(k + 1) = w / beta(k);
        }
        if (!done) k = kmax;
        x = v.leftCols(k) * ritz.head(k);
        x.normalize();
        apply(x, w);
        res.values = Eigen::VectorXd::Constant(1, x.dot(w));
        res.residuals = Eigen::VectorXd::Constant(1, (w - res.values(0) * x).norm());
        res.vectors = x;
        res.converged = res.residuals(0) <= 10.0 * tolerance * std::max(1.0, std::abs(res.values(0)));
        if (res.converged || done) break;
    }
    return res;
}

} // namespace tbsbm::linalg
