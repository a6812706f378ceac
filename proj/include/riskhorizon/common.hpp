#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace riskhorizon {

/// Verbosity read once from RISKHORIZON_LOG (0 = quiet, 1 = info, 2 = debug).
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("RISKHORIZON_LOG");
        return env ? std::atoi(env) : 0;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[riskhorizon] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[riskhorizon:debug] " << msg << "\n";
}

/// Thrown when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a decoded solver result does not match its expected layout.
class DecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

template <typename... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

}  // namespace riskhorizon
