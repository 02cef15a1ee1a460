#include "tbsbm/observables.hpp"

#include <cmath>

#include "tbsbm/numeric_format.hpp"

namespace tbsbm {

OrderParameterReport make_order_parameter(double o_z, double o_x, double imaginary_residual) {
    OrderParameterReport r;
    r.o_z = o_z;
    r.o_x = o_x;
    r.zeta = std::sqrt(o_z * o_z + o_x * o_x);
    r.imaginary_residual = imaginary_residual;
    return r;
}

std::string observable_csv_header() {
    return "energy,sigma_z,sigma_x,o_z,o_x,zeta,o_imag_residual,order_low_confidence,x_displacements,z_displacements";
}

namespace {

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ';';
        out += format_double(values[i]);
    }
    return out;
}

} // namespace

std::string observable_csv_row(const ObservableReport& r) {
    std::string row = format_double(r.energy) + ',' + format_double(r.sigma_z) + ',' + format_double(r.sigma_x) + ',';
    if (r.order) {
        row += format_double(r.order->o_z) + ',' + format_double(r.order->o_x) + ',' + format_double(r.order->zeta) + ',' +
               format_double(r.order->imaginary_residual) + ',' + (r.order->low_confidence ? "1" : "0") + ',';
    } else {
        row += ",,,,,";
    }
    row += join(r.x_displacements) + ',' + join(r.z_displacements);
    return row;
}

} // namespace tbsbm
