#pragma once

#include <stdexcept>
#include <string>

namespace gradflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (negative time, r < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Malformed input: size mismatch, non-monotone quantiles, unnormalized density.
class InputError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Scheme infeasibility, e.g. 1 + tau*lambda <= 0.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace gradflow
