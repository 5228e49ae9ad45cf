#pragma once

#include <stdexcept>
#include <string>

namespace uvol {

/// A type invariant or operation precondition was violated by the caller.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Query outside the domain on which an object is defined (grid, tabulation).
class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Numerical failure: stability violation, non-finite values, failed cross-check.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace uvol
