#pragma once

#include <stdexcept>
#include <string>

namespace casforce {

/// Invalid configuration: bad file contents, out-of-range settings,
/// inconsistent model definitions. Detected before numeric work begins.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A fit failed to converge or produced a non-physical optimum.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what, std::string diagnostics = {})
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
    const std::string& diagnostics() const { return diagnostics_; }

private:
    std::string diagnostics_;
};

} // namespace casforce
