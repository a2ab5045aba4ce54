#pragma once

#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace anderson {

/// Root of the toolkit's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameter (distribution, grid, K, bc, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Requested combination is outside what the toolkit supports.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inputs are individually valid but do not belong together.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Base class for failures of a numerical procedure on valid input.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double best_residual)
        : NumericalError(what + " (best residual " + format(best_residual) + ")"),
          best_residual_(best_residual) {}

    double best_residual() const noexcept { return best_residual_; }

private:
    static std::string format(double v) {
        std::ostringstream os;
        os << std::scientific << std::setprecision(3) << v;
        return os.str();
    }

    double best_residual_;
};

class NoRootError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoBifurcationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A scanned quantity never crossed its target value inside the given range.
class NoCrossingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// One of the toy-model geometry constraints (i)-(v) is violated.
class ConstraintError : public ParameterError {
public:
    ConstraintError(int constraint, const std::string& what)
        : ParameterError("constraint (" + roman(constraint) + ") violated: " + what),
          constraint_(constraint) {}

    int constraint() const noexcept { return constraint_; }

private:
    static std::string roman(int c) {
        static const char* names[] = {"?", "i", "ii", "iii", "iv", "v"};
        return (c >= 1 && c <= 5) ? names[c] : names[0];
    }
    int constraint_;
};

}  // namespace anderson
