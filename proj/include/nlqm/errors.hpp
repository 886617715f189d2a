#pragma once

#include <stdexcept>
#include <string>

namespace nlqm {

/// Invalid input: bad dimensions, out-of-range parameters, malformed config.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical invariant was violated at run time (norm drift, imaginary
/// residue, probability outside [0,1], ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Conditional probability requested for a condition of (near) zero probability.
class UndefinedConditional : public NumericalError {
public:
    explicit UndefinedConditional(const std::string& what) : NumericalError(what) {}
};

}  // namespace nlqm

namespace nlqm {

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlqm
