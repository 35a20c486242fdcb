#pragma once

#include <stdexcept>
#include <string>

namespace obstakit {

/// Bad sizes, indices, bounds or configuration values.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite data where finite values are required.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization broke down.
class NotSpdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method hit its iteration cap. Carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Two subspaces do not enclose a positive angle (c0 numerically 1).
class AngleDegenerateError : public std::runtime_error {
public:
    AngleDegenerateError(const std::string& what, double cosine)
        : std::runtime_error(what), cosine_(cosine) {}

    double cosine() const noexcept { return cosine_; }

private:
    double cosine_;
};

/// Problem too large for a dense or exhaustive method.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace obstakit
