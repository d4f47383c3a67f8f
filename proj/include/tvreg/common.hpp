#ifndef TVREG_COMMON_HPP
#define TVREG_COMMON_HPP

#include <stdexcept>
#include <string>

namespace tvreg {

// Invalid configuration or arguments (CLI exit code 2).
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numeric failure during estimation (CLI exit code 3).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tvreg

#endif
