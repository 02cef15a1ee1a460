// numeric_format.hpp - locale-independent, round-trippable number formatting

#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace tbsbm {

// %.17g equivalent; identical bytes for identical doubles on every platform.
inline std::string format_double(double value, int significant_digits = 17) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant_digits);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

} // namespace tbsbm
