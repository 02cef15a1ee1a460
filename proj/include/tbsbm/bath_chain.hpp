// bath_chain.hpp - sub-Ohmic bath spectral densities and their chain mapping

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace tbsbm::bath {

enum class BathId { Z, X };

std::string to_string(BathId id);

// Power-law bath with exponential cutoff, J(w) = 2 pi alpha wc^(1-s) w^s exp(-w/wc).
struct BathSpec {
    double s{0.5};
    double alpha{0.0};
    double omega_c{1.0};
    BathId bath_id{BathId::Z};

    // Throws DomainError unless s > 0, omega_c > 0, alpha >= 0.
    void validate() const;
};

// Nearest-neighbour boson chain equivalent to one bath.
// omegas[i] are on-site energies, hops[i] couples sites i and i+1,
// eta is the integrated spectral weight fixing the spin-chain coupling sqrt(eta / 4 pi).
struct ChainCoefficients {
    std::vector<double> omegas;
    std::vector<double> hops;
    double eta{0.0};

    std::size_t length() const noexcept { return omegas.size(); }
    double spin_coupling() const;

    // Enforces len(hops) = L - 1 and positivity of every entry.
    void validate() const;
};

enum class ChainSupport { FullLine, TruncatedAtCutoff };

// Upper limit of the integral defining eta.
enum class EtaLimit { Cutoff, Infinity };

// Quadrature layout used to discretise the measure J(w) dw.
// Panels are geometrically graded towards w = 0 (where w^s is singular) and uniform above omega_c.
struct DiscretizationOptions {
    std::size_t nodes_per_panel{24};
    double grading_ratio{0.15};
    double lowest_breakpoint{1e-16}; // in units of omega_c
    // FullLine upper limit in units of omega_c; 0 selects max(80, 60 + 8 L).
    double full_line_upper{0.0};
};

struct ChainOptions {
    ChainSupport support{ChainSupport::FullLine};
    EtaLimit eta_limit{EtaLimit::Cutoff};
    DiscretizationOptions grid{};
};

// Discrete measure (nodes, weights) with sum w_k p(x_k) ~ integral p(w) J(w) dw.
struct DiscreteMeasure {
    std::vector<double> nodes;
    std::vector<double> weights;
};

double spectral_density(const BathSpec& spec, double omega);

double renormalized_coupling(const BathSpec& spec, EtaLimit limit = EtaLimit::Cutoff);

DiscreteMeasure discretize_measure(const BathSpec& spec, ChainSupport support, std::size_t chain_length,
                                   const DiscretizationOptions& opts = {});

// Three-term recurrence of the polynomials orthonormal w.r.t. a discrete measure (Stieltjes procedure).
// Returns diagonal a_0..a_{L-1} and sqrt(b_1)..sqrt(b_{L-1}); throws NumericalInstability if b_k <= 0.
void stieltjes(const DiscreteMeasure& measure, std::size_t length, std::vector<double>& diagonal,
               std::vector<double>& off_diagonal);

ChainCoefficients chain_coefficients(const BathSpec& spec, std::size_t length, const ChainOptions& opts = {});

// Generalised-Laguerre recurrence for w^s exp(-w/wc) on [0, inf):
// omega_n = wc (2n + 1 + s), t_n = wc sqrt((n + 1)(n + 1 + s)).
ChainCoefficients laguerre_chain(const BathSpec& spec, std::size_t length, EtaLimit eta_limit = EtaLimit::Cutoff);

// CSV with columns index,omega,t (17 significant digits); t is empty on the last row.
void write_chain_csv(std::ostream& out, const ChainCoefficients& chain);

} // namespace tbsbm::bath
