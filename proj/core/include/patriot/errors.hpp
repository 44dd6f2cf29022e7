#ifndef PATRIOT_ERRORS_HPP
#define PATRIOT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace patriot {

/// Bad input: malformed documents, out-of-range values, dangling references.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Scheduling an action before the current simulated time.
class ClockViolation : public std::runtime_error {
public:
    explicit ClockViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Provisioning failed (e.g. socket bind); no partial testbed remains.
class ProvisionError : public std::runtime_error {
public:
    explicit ProvisionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace patriot

#endif
