#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "posauction/errors.hpp"

namespace posauction {

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, result.ptr);
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace posauction
