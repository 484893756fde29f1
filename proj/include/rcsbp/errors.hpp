#pragma once

#include <stdexcept>
#include <string>

namespace rcsbp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative solver exceeded its iteration budget.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain where a formula is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Euler-accelerated Fourier inversion failed its contraction check.
class InversionUnstable : public Error {
public:
    using Error::Error;
};

/// Quadrature over a tabulated scale function could not reach its tolerance.
class GridTooCoarse : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (model, refraction, simulation).
class ConfigError : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

} // namespace rcsbp
