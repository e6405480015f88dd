#pragma once

#include <stdexcept>
#include <string>

namespace pigp {

/// Gram factorization failed even at the largest jitter level.
class IllConditionedError : public std::runtime_error {
public:
    explicit IllConditionedError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data cannot support the requested operation (rank deficient,
/// zero variance, single point, ...).
class DegenerateDataError : public std::runtime_error {
public:
    explicit DegenerateDataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical routine (root bracketing, eigensolver) failed to converge.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every optimizer start failed; carries the per-start traces in the message.
class OptimizationFailedError : public std::runtime_error {
public:
    explicit OptimizationFailedError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed dataset / mask / config file; message carries the line number.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pigp
