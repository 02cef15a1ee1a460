#include "tbsbm/bath_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "tbsbm/errors.hpp"
#include "tbsbm/numeric_format.hpp"

namespace tbsbm::bath {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) - 1.0) * z * p1 - (static_cast<double>(j) - 1.0) * p2) /
                     static_cast<double>(j);
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

} // namespace

std::string to_string(BathId id) { return id == BathId::Z ? "z" : "x"; }

void BathSpec::validate() const {
    if (!(s > 0.0)) throw DomainError("bath exponent s must be positive");
    if (!(omega_c > 0.0)) throw DomainError("cutoff frequency omega_c must be positive");
    if (!(alpha >= 0.0)) throw DomainError("coupling alpha must be non-negative");
}

double ChainCoefficients::spin_coupling() const { return std::sqrt(eta / (4.0 * std::numbers::pi)); }

void ChainCoefficients::validate() const {
    if (!omegas.empty() && hops.size() + 1 != omegas.size())
        throw ContractViolation("chain needs exactly L - 1 hoppings");
    if (omegas.empty() && !hops.empty()) throw ContractViolation("empty chain cannot carry hoppings");
    for (double w : omegas)
        if (!(w > 0.0)) throw ContractViolation("chain frequencies must be positive");
    for (double t : hops)
        if (!(t > 0.0)) throw ContractViolation("chain hoppings must be positive");
    if (!(eta >= 0.0)) throw ContractViolation("eta must be non-negative");
}

double spectral_density(const BathSpec& spec, double omega) {
    spec.validate();
    if (omega < 0.0 || std::isnan(omega)) throw DomainError("spectral density needs omega >= 0");
    if (spec.alpha == 0.0 || omega == 0.0) return 0.0;
    return 2.0 * std::numbers::pi * spec.alpha * std::pow(spec.omega_c, 1.0 - spec.s) * std::pow(omega, spec.s) *
           std::exp(-omega / spec.omega_c);
}

double renormalized_coupling(const BathSpec& spec, EtaLimit limit) {
    spec.validate();
    if (spec.alpha == 0.0) return 0.0;
    auto j = [&](double w) { return w <= 0.0 ? 0.0 : spectral_density(spec, w); };
    if (limit == EtaLimit::Cutoff) {
        boost::math::quadrature::tanh_sinh<double> integrator;
        return integrator.integrate(j, 0.0, spec.omega_c, 1e-15);
    }
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(j, 0.0, std::numeric_limits<double>::infinity(), 1e-15);
}

DiscreteMeasure discretize_measure(const BathSpec& spec, ChainSupport support, std::size_t chain_length,
                                   const DiscretizationOptions& opts) {
    spec.validate();
    if (opts.nodes_per_panel < 2) throw ContractViolation("need at least two nodes per panel");
    if (!(opts.grading_ratio > 0.0 && opts.grading_ratio < 1.0)) throw ContractViolation("grading ratio must be in (0,1)");

    std::vector<double> gx, gw;
    gauss_legendre(opts.nodes_per_panel, gx, gw);

    const double wc = spec.omega_c;
    std::vector<double> breaks;
    // geometric panels on (0, wc]
    for (double b = wc; b > opts.lowest_breakpoint * wc; b *= opts.grading_ratio) breaks.push_back(b);
    breaks.push_back(0.0);
    std::reverse(breaks.begin(), breaks.end());
    if (support == ChainSupport::FullLine) {
        double upper = opts.full_line_upper;
        if (upper <= 0.0) upper = std::max(80.0, 60.0 + 8.0 * static_cast<double>(chain_length));
        const double width = 0.5;
        const auto panels = static_cast<std::size_t>(std::ceil((upper - 1.0) / width));
        for (std::size_t k = 1; k <= panels; ++k) breaks.push_back(wc * (1.0 + width * static_cast<double>(k)));
    }

    // Shape only: the measure is normalised to unit mass by the recurrence anyway, but
    // keep the physical scale so that sum(weights) approximates the integral of J.
    DiscreteMeasure m;
    m.nodes.reserve((breaks.size() - 1) * opts.nodes_per_panel);
    m.weights.reserve(m.nodes.capacity());
    BathSpec shape = spec;
    if (shape.alpha == 0.0) shape.alpha = 1.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
        for (std::size_t k = 0; k < gx.size(); ++k) {
            const double x = mid + half * gx[k];
            m.nodes.push_back(x);
            m.weights.push_back(half * gw[k] * spectral_density(shape, x));
        }
    }
    return m;
}

void stieltjes(const DiscreteMeasure& measure, std::size_t length, std::vector<double>& diagonal,
               std::vector<double>& off_diagonal) {
    const std::size_t n = measure.nodes.size();
    if (length == 0) throw ContractViolation("chain length must be at least 1");
    if (n < length) throw NumericalInstability("discrete measure has fewer nodes than requested chain sites", n);

    diagonal.assign(length, 0.0);
    off_diagonal.assign(length - 1, 0.0);

    // q_k(x_j) sqrt(w_j), kept unit-normalised
    std::vector<double> prev(n, 0.0), cur(n), next(n);
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) mass += measure.weights[j];
    if (!(mass > 0.0)) throw NumericalInstability("measure has no positive mass", 0);
    for (std::size_t j = 0; j < n; ++j) cur[j] = std::sqrt(measure.weights[j] / mass);

    double beta_sqrt = 0.0;
    for (std::size_t k = 0; k < length; ++k) {
        double a = 0.0;
        for (std::size_t j = 0; j < n; ++j) a += measure.nodes[j] * cur[j] * cur[j];
        diagonal[k] = a;
        if (k + 1 == length) break;
        double norm2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] = (measure.nodes[j] - a) * cur[j] - beta_sqrt * prev[j];
            norm2 += next[j] * next[j];
        }
        if (!(norm2 > 0.0) || !std::isfinite(norm2))
            throw NumericalInstability("Stieltjes recurrence lost positivity of beta", k + 1);
        beta_sqrt = std::sqrt(norm2);
        off_diagonal[k] = beta_sqrt;
        for (std::size_t j = 0; j < n; ++j) {
            prev[j] = cur[j];
            cur[j] = next[j] / beta_sqrt;
        }
    }
}

ChainCoefficients chain_coefficients(const BathSpec& spec, std::size_t length, const ChainOptions& opts) {
    spec.validate();
    if (length == 0) throw ContractViolation("chain length must be at least 1");
    const DiscreteMeasure measure = discretize_measure(spec, opts.support, length, opts.grid);
    ChainCoefficients chain;
    stieltjes(measure, length, chain.omegas, chain.hops);
    chain.eta = renormalized_coupling(spec, opts.eta_limit);
    return chain;
}

ChainCoefficients laguerre_chain(const BathSpec& spec, std::size_t length, EtaLimit eta_limit) {
    spec.validate();
    if (length == 0) throw ContractViolation("chain length must be at least 1");
    ChainCoefficients chain;
    chain.omegas.resize(length);
    chain.hops.resize(length - 1);
    for (std::size_t n = 0; n < length; ++n) {
        const double nd = static_cast<double>(n);
        chain.omegas[n] = spec.omega_c * (2.0 * nd + 1.0 + spec.s);
        if (n + 1 < length) chain.hops[n] = spec.omega_c * std::sqrt((nd + 1.0) * (nd + 1.0 + spec.s));
    }
    chain.eta = renormalized_coupling(spec, eta_limit);
    return chain;
}

void write_chain_csv(std::ostream& out, const ChainCoefficients& chain) {
    out << "index,omega,t\n";
    for (std::size_t i = 0; i < chain.length(); ++i) {
        out << i << ',' << format_double(chain.omegas[i]) << ',';
        if (i < chain.hops.size()) out << format_double(chain.hops[i]);
        out << '\n';
    }
}

} // namespace tbsbm::bath
