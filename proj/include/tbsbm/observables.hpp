// observables.hpp - ground-state observables shared by every solver

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tbsbm {

struct OrderParameterReport {
    double o_z{0.0};
    double o_x{0.0};
    double zeta{0.0};
    double imaginary_residual{0.0};     // max |Im <O>|
    double calibration_deviation{0.0};  // 2 pi return deviation of the rotation used
    bool low_confidence{false};

    static constexpr double imaginary_tol = 1e-8;
    static constexpr double calibration_tol = 1e-4;
    bool imaginary_flagged() const noexcept { return imaginary_residual >= imaginary_tol; }
};

OrderParameterReport make_order_parameter(double o_z, double o_x, double imaginary_residual = 0.0);

// Column order of the CSV row:
//   energy, sigma_z, sigma_x, o_z, o_x, zeta, o_imag_residual, order_low_confidence,
//   x_displacements, z_displacements
// The last two hold per-site values X_i (chain index 0 first) joined by ';'.
struct ObservableReport {
    double energy{0.0};
    double sigma_z{0.0};
    double sigma_x{0.0};
    std::vector<double> x_displacements;
    std::vector<double> z_displacements;
    std::optional<OrderParameterReport> order;
};

std::string observable_csv_header();
std::string observable_csv_row(const ObservableReport& report);

} // namespace tbsbm
