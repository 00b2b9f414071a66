#pragma once

#include <stdexcept>
#include <string>

namespace hybridcache {

// Invalid or unparsable experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical solver did not reach the requested tolerance (CLI exit code 3).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Geometry/workload combination that cannot be run, e.g. cache at least as
// large as the page population (CLI exit code 4).
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hybridcache
