#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tbsbm/bath_chain.hpp"
#include "tbsbm/errors.hpp"

using namespace tbsbm;
using namespace tbsbm::bath;

namespace {

// Modified Chebyshev algorithm (Gautschi) with moments against shifted Legendre polynomials on [0, wc].
// Moments come from a plain log-spaced Simpson rule, independent of the library's graded panels.
void modified_chebyshev(double s, double wc, std::size_t n, std::vector<double>& alpha, std::vector<double>& beta) {
    const std::size_t points = 100001;  // odd, for Simpson
    const double lo = 1e-8 * wc;
    const double du = std::log(wc / lo) / static_cast<double>(points - 1);
    // shifted Legendre on [0, wc] in monic form: p_{k+1} = (x - a_k) p_k - b_k p_{k-1}
    const double half = 0.5 * wc;
    std::vector<double> a(2 * n, half), b(2 * n, 0.0);
    for (std::size_t k = 1; k < 2 * n; ++k) {
        const double kk = static_cast<double>(k);
        b[k] = half * half * kk * kk / (4.0 * kk * kk - 1.0);
    }
    std::vector<double> nu(2 * n, 0.0);
    std::vector<double> p(2 * n);
    for (std::size_t i = 0; i < points; ++i) {
        const double u = std::log(lo) + du * static_cast<double>(i);
        const double x = std::exp(u);
        // dx = x du, composite Simpson weights
        const double simpson = (i == 0 || i + 1 == points) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double w = std::pow(x, s) * std::exp(-x / wc) * x * du * simpson / 3.0;
        p[0] = 1.0;
        p[1] = x - a[0];
        for (std::size_t k = 1; k + 1 < 2 * n; ++k) p[k + 1] = (x - a[k]) * p[k] - b[k] * p[k - 1];
        for (std::size_t k = 0; k < 2 * n; ++k) nu[k] += w * p[k];
    }
    // [0, lo]: leading term of x^s (1 - x/wc) p_k(0-ish) is below 1e-10 of the mass, add the x^s piece exactly
    {
        const double tail = std::pow(lo, s + 1.0) / (s + 1.0);
        p[0] = 1.0;
        p[1] = -a[0];
        for (std::size_t k = 1; k + 1 < 2 * n; ++k) p[k + 1] = -a[k] * p[k] - b[k] * p[k - 1];
        for (std::size_t k = 0; k < 2 * n; ++k) nu[k] += tail * p[k];
    }
    alpha.assign(n, 0.0);
    beta.assign(n, 0.0);
    std::vector<std::vector<double>> sig(n + 1, std::vector<double>(2 * n, 0.0));
    alpha[0] = a[0] + nu[1] / nu[0];
    beta[0] = nu[0];
    for (std::size_t l = 0; l < 2 * n; ++l) sig[1][l] = nu[l];
    for (std::size_t k = 1; k < n; ++k) {
        for (std::size_t l = k; l < 2 * n - k; ++l) {
            sig[k + 1][l] = sig[k][l + 1] - (alpha[k - 1] - a[l]) * sig[k][l] - beta[k - 1] * sig[k - 1][l] + b[l] * sig[k][l - 1];
        }
        alpha[k] = a[k] + sig[k + 1][k + 1] / sig[k + 1][k] - sig[k][k] / sig[k][k - 1];
        beta[k] = sig[k + 1][k] / sig[k][k - 1];
    }
}

// Written out independently of the library.
double spec_density_ref(const BathSpec& b, double w) {
    return 2.0 * std::numbers::pi * b.alpha * std::pow(b.omega_c, 1.0 - b.s) * std::pow(w, b.s) * std::exp(-w / b.omega_c);
}

} // namespace

TEST(SpectralDensity, ClosedFormValues) {
    EXPECT_EQ(spectral_density({0.5, 0.1, 1.0, BathId::Z}, 0.0), 0.0);
    EXPECT_NEAR(spectral_density({0.25, 0.02, 1.0, BathId::Z}, 1.0), 2.0 * std::numbers::pi * 0.02 * std::exp(-1.0), 1e-15);
    for (double w : {0.0, 0.3, 7.0}) EXPECT_EQ(spectral_density({0.6, 0.0, 2.0, BathId::X}, w), 0.0);
}

TEST(SpectralDensity, RejectsNegativeFrequencyAndBadSpecs) {
    EXPECT_THROW(spectral_density({0.5, 0.1, 1.0, BathId::Z}, -1e-3), DomainError);
    EXPECT_THROW(spectral_density({0.0, 0.1, 1.0, BathId::Z}, 1.0), DomainError);
    EXPECT_THROW(spectral_density({0.5, -0.1, 1.0, BathId::Z}, 1.0), DomainError);
    EXPECT_THROW(spectral_density({0.5, 0.1, 0.0, BathId::Z}, 1.0), DomainError);
}

TEST(RenormalizedCoupling, OhmicIncompleteGamma) {
    // s = 1: 2 pi alpha int_0^1 w e^{-w} dw = 2 pi alpha (1 - 2/e)
    const double eta = renormalized_coupling({1.0, 0.1, 1.0, BathId::Z});
    EXPECT_NEAR(eta, 2.0 * std::numbers::pi * 0.1 * (1.0 - 2.0 * std::exp(-1.0)), 1e-13);
    EXPECT_EQ(renormalized_coupling({0.5, 0.0, 1.0, BathId::Z}), 0.0);
}

TEST(RenormalizedCoupling, SubOhmicAgainstIndependentQuadrature) {
    for (double s : {0.25, 0.5, 0.6, 0.75}) {
        for (double wc : {1.0, 2.5}) {
            const BathSpec spec{s, 0.02, wc, BathId::Z};
            boost::math::quadrature::tanh_sinh<double> ts;
            const double ref = ts.integrate([&](double w) { return spec_density_ref(spec, w); }, 0.0, wc);
            EXPECT_NEAR(renormalized_coupling(spec) / ref, 1.0, 1e-12) << "s=" << s;
            // the infinite-range convention is 2 pi alpha wc^2 Gamma(1 + s)
            const double inf = 2.0 * std::numbers::pi * 0.02 * wc * wc * boost::math::tgamma(1.0 + s);
            EXPECT_NEAR(renormalized_coupling(spec, EtaLimit::Infinity) / inf, 1.0, 1e-12);
        }
    }
}

TEST(RenormalizedCoupling, MonotoneInAlpha) {
    double last = 0.0;
    for (double alpha : {0.0, 0.01, 0.02, 0.1, 0.5}) {
        const double eta = renormalized_coupling({0.3, alpha, 1.0, BathId::X});
        EXPECT_GE(eta, last);
        last = eta;
    }
}

TEST(ChainCoefficients, FullLineMatchesLaguerre) {
    for (double s : {0.25, 0.5, 0.6, 0.75, 1.0}) {
        for (double wc : {1.0, 0.5}) {
            const BathSpec spec{s, 0.1, wc, BathId::Z};
            const auto chain = chain_coefficients(spec, 30);
            ASSERT_EQ(chain.omegas.size(), 30u);
            ASSERT_EQ(chain.hops.size(), 29u);
            for (std::size_t n = 0; n < 30; ++n) {
                const double nn = static_cast<double>(n);
                EXPECT_NEAR(chain.omegas[n], wc * (2.0 * nn + 1.0 + s), 1e-10 * wc * (2.0 * nn + 1.0 + s)) << "n=" << n;
                if (n + 1 < 30) {
                    EXPECT_NEAR(chain.hops[n], wc * std::sqrt((nn + 1.0) * (nn + 1.0 + s)), 1e-10 * chain.hops[n]);
                }
            }
        }
    }
}

TEST(ChainCoefficients, LaguerreClosedFormDirect) {
    const auto chain = laguerre_chain({0.5, 0.1, 1.0, BathId::Z}, 4);
    EXPECT_DOUBLE_EQ(chain.omegas[0], 1.5);
    EXPECT_DOUBLE_EQ(chain.omegas[3], 7.5);
    EXPECT_DOUBLE_EQ(chain.hops[0], std::sqrt(1.5));
    EXPECT_DOUBLE_EQ(chain.hops[2], std::sqrt(3.0 * 3.5));
}

TEST(ChainCoefficients, SingleSiteIsFirstMomentRatio) {
    const BathSpec spec{0.25, 0.02, 1.0, BathId::Z};
    const auto chain = chain_coefficients(spec, 1, {ChainSupport::TruncatedAtCutoff});
    ASSERT_EQ(chain.omegas.size(), 1u);
    EXPECT_TRUE(chain.hops.empty());
    boost::math::quadrature::tanh_sinh<double> ts;
    const double m0 = ts.integrate([&](double w) { return spectral_density(spec, w); }, 0.0, 1.0);
    const double m1 = ts.integrate([&](double w) { return w * spectral_density(spec, w); }, 0.0, 1.0);
    EXPECT_NEAR(chain.omegas[0], m1 / m0, 1e-12);
}

TEST(ChainCoefficients, TruncatedSupportMatchesModifiedChebyshev) {
    for (double s : {0.25, 0.6}) {
        const BathSpec spec{s, 0.02, 1.0, BathId::Z};
        const auto chain = chain_coefficients(spec, 10, {ChainSupport::TruncatedAtCutoff});
        std::vector<double> alpha, beta;
        modified_chebyshev(s, 1.0, 10, alpha, beta);
        for (std::size_t n = 0; n < 10; ++n) {
            EXPECT_NEAR(chain.omegas[n], alpha[n], 1e-8) << "s=" << s << " n=" << n;
            if (n + 1 < 10) {
                EXPECT_NEAR(chain.hops[n], std::sqrt(beta[n + 1]), 1e-8) << "s=" << s << " n=" << n;
            }
        }
    }
}

TEST(ChainCoefficients, TruncatedSupportHasPositiveHopsAndBoundedSites) {
    const auto chain = chain_coefficients({0.25, 0.02, 1.0, BathId::Z}, 30, {ChainSupport::TruncatedAtCutoff});
    for (double w : chain.omegas) {
        EXPECT_GT(w, 0.0);
        EXPECT_LT(w, 1.0);
    }
    for (double t : chain.hops) EXPECT_GT(t, 0.0);
}

TEST(ChainCoefficients, EtaFollowsConvention) {
    const BathSpec spec{0.5, 0.1, 1.0, BathId::X};
    EXPECT_NEAR(chain_coefficients(spec, 3).eta, renormalized_coupling(spec), 1e-15);
    ChainOptions opts;
    opts.eta_limit = EtaLimit::Infinity;
    const auto chain = chain_coefficients(spec, 3, opts);
    EXPECT_NEAR(chain.eta, renormalized_coupling(spec, EtaLimit::Infinity), 1e-15);
    EXPECT_NEAR(chain.spin_coupling(), std::sqrt(chain.eta / (4.0 * std::numbers::pi)), 1e-15);
}

TEST(ChainCoefficients, RejectsEmptyChain) {
    EXPECT_THROW(chain_coefficients({0.5, 0.1, 1.0, BathId::Z}, 0), ContractViolation);
}

TEST(ChainCoefficients, ValidateEnforcesShape) {
    ChainCoefficients c;
    c.omegas = {1.0, 2.0};
    c.hops = {};
    EXPECT_THROW(c.validate(), ContractViolation);
    c.hops = {-1.0};
    EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(ChainCsv, SeventeenDigitsAndEmptyLastHop) {
    const auto chain = laguerre_chain({0.5, 0.1, 1.0, BathId::Z}, 2);
    std::ostringstream out;
    write_chain_csv(out, chain);
    std::istringstream in(out.str());
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    EXPECT_EQ(header, "index,omega,t");
    EXPECT_EQ(row0.substr(0, 6), "0,1.5,");
    EXPECT_DOUBLE_EQ(std::stod(row0.substr(6)), std::sqrt(1.5));
    EXPECT_EQ(row1.back(), ',');
}
