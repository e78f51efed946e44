#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace forcegp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration, schema violation, or inconsistent inputs.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure (factorization breakdown, divergence, degenerate input).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Covariance factorization failed even after the full jitter ladder.
class IllConditionedError : public NumericalError {
public:
    IllConditionedError(const std::string& msg, std::vector<double> jitters_tried)
        : NumericalError(msg), jitter_ladder(std::move(jitters_tried)) {}

    /// Relative jitter levels that were attempted, in order.
    std::vector<double> jitter_ladder;
};

/// File system or parsing failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace forcegp
