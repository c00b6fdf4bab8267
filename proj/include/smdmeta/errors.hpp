#pragma once

#include <stdexcept>
#include <string>

namespace smdmeta {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Data violates an invariant (n < 2, v2 <= 0, zero pooled variance, ...).
class InvariantError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative procedure failed. Carries the last bracket when one exists.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double lo = 0.0, double hi = 0.0)
        : std::runtime_error(what), lo_(lo), hi_(hi) {}

    double bracket_lo() const noexcept { return lo_; }
    double bracket_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

// Malformed user input (CSV syntax, unknown flags, grid values).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace smdmeta
