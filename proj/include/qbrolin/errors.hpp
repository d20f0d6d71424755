#pragma once

#include <stdexcept>
#include <string>

namespace qbrolin {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Validation-class failures (bad input, violated precondition).
class PreconditionViolation : public Error {
public:
    explicit PreconditionViolation(const std::string& what)
        : Error("PreconditionViolation", what) {}

protected:
    PreconditionViolation(std::string kind, const std::string& what)
        : Error(std::move(kind), what) {}
};

/// Malformed or inconsistent run configuration.
class ConfigError : public PreconditionViolation {
public:
    explicit ConfigError(const std::string& what) : PreconditionViolation("ConfigError", what) {}
};

class ZeroDivisor : public Error {
public:
    explicit ZeroDivisor(const std::string& what) : Error("ZeroDivisor", what) {}
};

class CoefficientOffSlice : public PreconditionViolation {
public:
    CoefficientOffSlice(std::size_t index, double off_plane)
        : PreconditionViolation("CoefficientOffSlice",
                                "coefficient " + std::to_string(index) +
                                    " is off the slice by " + std::to_string(off_plane)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ExceptionalTarget : public PreconditionViolation {
public:
    explicit ExceptionalTarget(const std::string& what)
        : PreconditionViolation("ExceptionalTarget", what) {}
};

/// Numerical failures; the CLI maps these to exit code 3.
class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what) : Error("NumericalFailure", what) {}

protected:
    NumericalFailure(std::string kind, const std::string& what) : Error(std::move(kind), what) {}
};

class SolverFailure : public NumericalFailure {
public:
    SolverFailure(const std::string& what, double worst_residual)
        : NumericalFailure("SolverFailure", what), worst_residual_(worst_residual) {}
    double worst_residual() const noexcept { return worst_residual_; }

private:
    double worst_residual_;
};

class BudgetExceeded : public NumericalFailure {
public:
    explicit BudgetExceeded(const std::string& what)
        : NumericalFailure("BudgetExceeded", what) {}
};

class SingularNode : public NumericalFailure {
public:
    explicit SingularNode(const std::string& what) : NumericalFailure("SingularNode", what) {}
};

class ClampMassExceeded : public NumericalFailure {
public:
    explicit ClampMassExceeded(const std::string& what)
        : NumericalFailure("ClampMassExceeded", what) {}
};

}  // namespace qbrolin
