#pragma once

#include <stdexcept>
#include <string>

namespace gramor {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The (shifted) pencil behind a Lyapunov/Sylvester solve is numerically
/// singular, i.e. lambda_i + lambda_j ~ 0 for some eigenvalue pair.
class SingularPencilError : public Error {
public:
    using Error::Error;
};

/// The splitting iteration did not meet its step tolerance within maxIter.
class IterationDivergenceError : public Error {
public:
    IterationDivergenceError(const std::string& what, double lastResidual)
        : Error(what), lastResidual(lastResidual) {}
    double lastResidual;
};

/// A matrix-free eigenvalue iteration ran out of iterations.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double lastEstimate)
        : Error(what), lastEstimate(lastEstimate) {}
    double lastEstimate;
};

/// A matrix required to be positive semidefinite is not.
class NonPsdError : public Error {
public:
    using Error::Error;
};

/// The zero eigenspace of the adjoint operator did not yield a PSD eigenmatrix.
class DegenerateEigenspaceError : public Error {
public:
    using Error::Error;
};

/// A caller-facing contract (precondition guaranteed by theory) was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid argument (out-of-range order, malformed input, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Computed quantities contradict each other beyond tolerance
/// (e.g. a negative radicand in an error-bound trace expression).
class NumericalInconsistencyError : public Error {
public:
    using Error::Error;
};

/// A signal could not be evaluated (NaN/Inf at some time).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// A stability precondition failed or could not be certified.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// The implicit Euler-Maruyama step matrix is singular for the given h.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator step size underflow.
class StiffnessError : public Error {
public:
    using Error::Error;
};

/// Truncation requested past the numerically meaningful part of the spectrum.
class IllConditionedTruncationError : public Error {
public:
    using Error::Error;
};

}  // namespace gramor
