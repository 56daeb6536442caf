#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfard {

// Base for all library errors; callers that do not care about the category
// can catch this one.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (bad index,
// mismatched dimensions, ...).
class InputDomainError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A request that would exceed a hard resource limit (memory/enumeration size).
class ResourceError : public Error {
public:
    using Error::Error;
};

class NumericalDivergence : public Error {
public:
    NumericalDivergence(std::int64_t step, const std::string& what)
        : Error("numerical divergence at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

class TimeoutError : public Error {
public:
    TimeoutError(std::int64_t step, const std::string& what)
        : Error("wall-clock budget exceeded at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

// Cholesky of K + tau*I failed; carries a condition-number estimate.
class IllConditionedError : public Error {
public:
    IllConditionedError(double condition_estimate, const std::string& what)
        : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
          condition_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

}  // namespace mfard
