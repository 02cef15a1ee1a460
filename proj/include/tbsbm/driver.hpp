// driver.hpp - experiment configuration, parameter sweeps and phase-diagram assembly
//
// Every solve is a pure function of (config, point); sweeps fan out over worker threads and are
// merged in sweep order, so outputs do not depend on the worker count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tbsbm/dmrg_engine.hpp"
#include "tbsbm/observables.hpp"
#include "tbsbm/variational.hpp"

namespace tbsbm::driver {

enum class Solver { ED, DMRG, Variational };

std::string to_string(Solver solver);
Solver solver_from_string(const std::string& name);

// Inclusive range start, start + step, ... <= stop. stop < start is an empty sweep.
struct SweepAxis {
    std::string parameter{"alpha_x"};  // alpha_x, alpha_z, s or bias
    double start{0.0};
    double stop{-1.0};
    double step{1.0};

    std::vector<double> values() const;
    void validate() const;
};

struct ClassifierThresholds {
    double sigma{0.05};      // |<sigma>| below this counts as vanishing
    double zeta_band{0.05};  // zeta within this of 1 counts as unity
};

struct ExperimentConfig {
    Solver solver{Solver::DMRG};

    // baths
    double s{0.5};
    double alpha_z{0.1};
    double alpha_x{0.1};
    double omega_c{1.0};
    double bias{0.0};

    // chain solvers
    std::size_t chain_length{20};  // per bath
    std::size_t n_ph{6};           // ED truncation
    dmrg::DmrgConfig dmrg{};

    // variational
    std::size_t var_terms{4};
    variational::ModeGridOptions var_grid{};
    variational::RelaxSchedule var_schedule{};
    bool var_rotational{false};
    std::size_t var_theta_points{400};

    bool order_parameter{true};

    // rotation scans
    std::size_t rotation_intervals{40};
    double dtheta_divisor{200.0};  // dtheta = pi / divisor

    SweepAxis sweep{};
    std::vector<double> phase_s{};
    std::vector<double> phase_alpha{};
    ClassifierThresholds thresholds{};

    std::uint64_t seed{1};
    std::size_t workers{1};

    void validate() const;
    // Full resolved configuration, embedded in every output.
    nlohmann::json to_json() const;
    // Copy with one named parameter replaced (sweep axes and phase-diagram points).
    ExperimentConfig with(const std::string& parameter, double value) const;
};

std::string version();

// Header lines (prefixed "# ") carrying version and resolved config.
void write_provenance(std::ostream& out, const ExperimentConfig& cfg, const std::string& kind);

// One solve at the configured point; seeds derive from cfg.seed only.
ObservableReport solve_point(const ExperimentConfig& cfg);

struct PointResult {
    double value{0.0};
    bool ok{false};
    std::string error;
    ObservableReport report;
};

// Runs fn(0 .. n-1) on `workers` threads; results come back in index order.
std::vector<PointResult> fan_out(std::size_t n, std::size_t workers, const std::function<PointResult(std::size_t)>& fn);

std::vector<PointResult> run_sweep(const ExperimentConfig& cfg);
void write_sweep_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<PointResult>& rows);

enum class Phase { Localized, Delocalized, Critical, Unknown };
std::string to_string(Phase phase);

// Localized: |sz| > t and zeta ~ 1. Delocalized: |sz| < t, |sx| > t and zeta ~ 1.
// Critical: |sz|, |sx| < t, zeta ~ 1 and alpha_z = alpha_x. Everything else, including a missing zeta, is Unknown.
Phase classify_phase(const ObservableReport& report, bool symmetric_line, const ClassifierThresholds& t = {});

struct PhasePoint {
    double s{0.0};
    double alpha{0.0};
    bool ok{false};
    std::string error;
    ObservableReport report;
    Phase label{Phase::Unknown};
};

struct PhaseTransition {
    double alpha{0.0};
    std::optional<double> s;  // linear interpolation of the first upward crossing of zeta = 0.5 in s
};

struct PhaseDiagramResult {
    std::vector<PhasePoint> points;  // alpha major, s minor
    std::vector<PhaseTransition> transitions;
};

// Points on the symmetric line alpha_z = alpha_x = alpha for every (s, alpha) in the config grid.
PhaseDiagramResult run_phase_diagram(const ExperimentConfig& cfg);
void write_phase_csv(std::ostream& out, const ExperimentConfig& cfg, const PhaseDiagramResult& result);
void write_transition_csv(std::ostream& out, const ExperimentConfig& cfg, const PhaseDiagramResult& result);

// Solver inputs derived from a config.
mps::ChainModel chain_model(const ExperimentConfig& cfg);
ed::DenseModel dense_model(const ExperimentConfig& cfg);
variational::ModeGrid mode_grid(const ExperimentConfig& cfg);

} // namespace tbsbm::driver
