#pragma once

#include <stdexcept>
#include <string>

namespace nlistack {

// Invalid configuration: bad parameter values, contradictory options,
// malformed command lines.  Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data: unreadable corpora, parse errors,
// label mismatches between prediction files.  Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-finite inputs, singular matrices where an
// algorithm requires otherwise, impossible boosting states.  Maps to CLI
// exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace nlistack
