#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "tbsbm/errors.hpp"
#include "tbsbm/fock_algebra.hpp"

using namespace tbsbm;
using namespace tbsbm::fock;

TEST(Ladder, SmallDimensions) {
    const auto two = ladder_matrices(2);
    Eigen::Matrix2d b2;
    b2 << 0, 1, 0, 0;
    EXPECT_EQ(two.b, Eigen::MatrixXd(b2));
    const auto three = ladder_matrices(3);
    EXPECT_TRUE(Eigen::VectorXd((three.b_dagger * three.b).diagonal()).isApprox(Eigen::Vector3d(0, 1, 2), 1e-15));
    EXPECT_EQ(Eigen::VectorXd(three.n_hat.diagonal()), Eigen::Vector3d(0, 1, 2));
}

TEST(Ladder, CommutatorTruncationPattern) {
    // [b, b^dagger] = I except the last diagonal entry, which is 1 - dim (up to sqrt(n)^2 rounding)
    for (std::size_t dim : {1u, 2u, 5u, 16u}) {
        const auto ops = ladder_matrices(dim);
        const Eigen::MatrixXd c = ops.b * ops.b_dagger - ops.b_dagger * ops.b;
        Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        expect(static_cast<Eigen::Index>(dim) - 1, static_cast<Eigen::Index>(dim) - 1) = 1.0 - static_cast<double>(dim);
        EXPECT_LT((c - expect).cwiseAbs().maxCoeff(), 1e-14) << "dim=" << dim;
    }
}

TEST(Ladder, AdjointPairsAndHermiticity) {
    const auto ops = ladder_matrices(12);
    EXPECT_EQ((ops.b.transpose() - ops.b_dagger).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((ops.n_hat - ops.n_hat.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Parity, AlternatesAndSquaresToIdentity) {
    const Eigen::MatrixXd p2 = local_parity(2);
    EXPECT_EQ(p2(0, 0), 1.0);
    EXPECT_EQ(p2(1, 1), -1.0);
    const Eigen::MatrixXd p = local_parity(9);
    EXPECT_TRUE((p * p).isIdentity(0.0));
    const Eigen::MatrixXd q = odd_projector(9);
    EXPECT_TRUE((p + 2.0 * q).isIdentity(0.0));
}

TEST(Parity, FlipsCoherentStates) {
    for (complex f : {complex(0.3, 0.0), complex(-1.2, 0.7), complex(0.0, 2.0), complex(1.4, -1.4)}) {
        const CoherentState plus(f, 40), minus(-f, 40);
        const Eigen::VectorXcd flipped = local_parity(40).cast<complex>() * plus.amplitudes();
        const double fidelity = std::norm(minus.amplitudes().dot(flipped));
        EXPECT_GT(fidelity, 1.0 - 1e-10) << f;
    }
}

TEST(Coherent, TruncatedSeriesAndFlag) {
    const CoherentState vac(0.0, 5);
    EXPECT_NEAR(std::abs(vac.amplitudes()(0)), 1.0, 1e-15);
    EXPECT_FALSE(vac.truncation_flagged());
    const CoherentState big(complex(4.0, 0.0), 8);
    EXPECT_TRUE(big.truncation_flagged());
    EXPECT_LT(big.captured_norm(), 1.0 - 1e-10);
    const CoherentState ok(complex(1.0, 0.5), 40);
    EXPECT_NEAR(ok.captured_norm(), 1.0, 1e-12);
}

TEST(Coherent, OverlapsMatchClosedForm) {
    // |<f|g>| = exp(-|f - g|^2 / 2), phase Im(conj(f) g)
    for (auto [f, g] : {std::pair{complex(0.2, 0.1), complex(-0.5, 0.3)}, std::pair{complex(1.1, -0.4), complex(0.9, 0.6)}}) {
        const complex ref = std::exp(-0.5 * std::norm(f - g) + complex(0.0, (std::conj(f) * g).imag()));
        EXPECT_NEAR(std::abs(coherent_overlap(f, g) - ref), 0.0, 1e-14);
        const CoherentState cf(f, 40), cg(g, 40);
        EXPECT_NEAR(std::abs(cf.amplitudes().dot(cg.amplitudes()) - ref), 0.0, 1e-10);
    }
}

TEST(Displacement, KnownExpectations) {
    const LocalBasis bare = LocalBasis::bare(40);
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(40);
    vac(0) = 1.0;
    EXPECT_NEAR(displacement_expectation(vac, bare), 0.0, 1e-15);

    const CoherentState cs(complex(1.3, 0.0), 40);
    EXPECT_NEAR(displacement_expectation(cs.amplitudes() / std::sqrt(cs.captured_norm()), bare), std::numbers::sqrt2 * 1.3, 1e-10);

    Eigen::VectorXcd sup = Eigen::VectorXcd::Zero(2);
    sup << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
    EXPECT_NEAR(displacement_expectation(sup, LocalBasis::bare(2)), 1.0 / std::numbers::sqrt2, 1e-15);
}

TEST(Displacement, RejectsUnnormalisedInput) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(3);
    v(0) = 1.1;
    EXPECT_THROW(displacement_expectation(v, LocalBasis::bare(3)), ContractViolation);
}

TEST(LocalBasis, ProjectedOperatorsThroughTransform) {
    // a rotated two-vector basis inside a bare space of 6
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(6, 2);
    u(0, 0) = std::cos(0.3);
    u(2, 0) = std::sin(0.3);
    u(1, 1) = 1.0;
    const LocalBasis basis(u);
    EXPECT_LT(basis.orthonormality_error(), 1e-15);
    EXPECT_FALSE(basis.is_identity());
    const auto ops = ladder_matrices(6);
    EXPECT_LT((basis.b() - u.transpose() * ops.b * u).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((basis.n_hat() - u.transpose() * ops.n_hat * u).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((basis.position() - (basis.b() + basis.b_dagger()) / std::numbers::sqrt2).cwiseAbs().maxCoeff(), 1e-15);

    const LocalBasis trunc = LocalBasis::fock_truncated(16, 8);
    EXPECT_EQ(trunc.bare_dim(), 16u);
    EXPECT_EQ(trunc.dim(), 8u);
    EXPECT_TRUE(LocalBasis::bare(5).is_identity());
}
