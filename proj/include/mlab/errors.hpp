#pragma once

#include <stdexcept>
#include <string>

namespace mlab {

// Invalid user input: malformed config, out-of-range parameter, bad expression.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: ODE solver blow-up, non-monotone table, overflow.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Internal invariant violation; indicates a bug, not bad input.
struct internal_error : std::logic_error {
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace mlab
