#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qfcsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, malformed file, inconsistent parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure did not reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Normal equations of a least-squares problem are singular.
class RankDeficiencyError : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// Adaptive quadrature gave up; `partial` holds the best estimate reached.
class QuadratureFailure : public ConvergenceError {
public:
    QuadratureFailure(const std::string& what, double partial)
        : ConvergenceError(what), partial_(partial) {}
    double partial() const noexcept { return partial_; }

private:
    double partial_;
};

/// Fabry-Perot contrast is below what the facet reflectivity allows.
class NegativeLossError : public ValidationError {
public:
    NegativeLossError(const std::string& what, double value)
        : ValidationError(what), value_(value) {}
    double would_be_alpha() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

}  // namespace detail
}  // namespace qfcsim
