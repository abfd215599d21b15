#pragma once

#include <stdexcept>
#include <string>

namespace sasfm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Evaluation point outside [0,1].
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid argument value (counts, concentrations, ids, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Raw generators are numerically linearly dependent on the grid.
class DegenerateBasisError : public Error {
public:
    using Error::Error;
};

/// Phase function violates monotonicity or the slope floor.
class DegeneratePhaseError : public Error {
public:
    using Error::Error;
};

/// Factorization or other numerical failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace sasfm
