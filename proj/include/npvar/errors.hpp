#pragma once

#include <stdexcept>
#include <string>

namespace npvar {

// Bad settings, flags, or arguments.
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Unreadable or malformed input data / files.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular system, non-finite estimate, degenerate fit).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace npvar
