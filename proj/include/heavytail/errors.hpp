#ifndef HEAVYTAIL_ERRORS_HPP
#define HEAVYTAIL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace heavytail {

// Bad user-supplied configuration (out-of-range delta, malformed grid, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A requested quantity does not exist or cannot be computed for the given
// inputs (e.g. an infinite moment, or ground truth that was never supplied).
// The message names the violated requirement.
class CapabilityError : public std::runtime_error {
public:
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// A theorem precondition is violated, so the guarantee would be vacuous.
// Distinct from ConfigError so callers can map it to a dedicated exit code.
class AssumptionError : public std::runtime_error {
public:
    explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace heavytail

#endif
