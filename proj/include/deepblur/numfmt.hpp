#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace deepblur {

// Shortest decimal text that round-trips to the same double. Locale-free.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace deepblur
