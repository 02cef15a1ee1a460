// errors.hpp - exception types shared by the solvers

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbsbm {

// Input outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Violated precondition on a value handed to the library.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problem too large for the configured caps.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Recurrence or iteration lost positivity / stability.
class NumericalInstability : public std::runtime_error {
public:
    NumericalInstability(const std::string& what, std::size_t index)
        : std::runtime_error(what + " (first bad index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Iterative solver exhausted its budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_value, double residual)
        : std::runtime_error(what), last_value_(last_value), residual_(residual) {}

    double last_value() const noexcept { return last_value_; }
    double residual() const noexcept { return residual_; }

private:
    double last_value_;
    double residual_;
};

} // namespace tbsbm
