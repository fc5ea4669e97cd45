#pragma once

#include <stdexcept>
#include <string>

namespace daestab {

// Error taxonomy shared by all modules. Every error carries a short
// machine-readable code (stable, used in JSON reports and CLI exit logic)
// and a human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Shape mismatch between operands.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

// A matrix that must be invertible failed the pivot test.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& msg, double pivot)
        : Error("singular", msg), pivot_(pivot) {}
    double pivot() const noexcept { return pivot_; }

private:
    double pivot_;
};

// Iterative numeric procedure failed (overflow, non-convergence).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg, long iterations = -1)
        : Error("numeric", msg), iterations_(iterations) {}
    long iterations() const noexcept { return iterations_; }

private:
    long iterations_;
};

// Malformed expression text; offset is the byte position of the failure.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error("parse", msg), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Input or evaluation left the real domain (1/0, ln of non-positive,
// zero polynomial, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

// Problem file or problem data violates the documented schema/contract.
class ValidationError : public Error {
public:
    ValidationError(const std::string& field, const std::string& reason)
        : Error("validation", "field '" + field + "': " + reason), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A fixed-point iteration moved away from its target.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error("divergence", msg) {}
};

// Iteration budget exhausted before the tolerance was met.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, double last_residual, long iterations)
        : Error("nonconvergence", msg), residual_(last_residual), iterations_(iterations) {}
    double last_residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

// Operation invoked outside its stated precondition.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& msg) : Error("precondition", msg) {}
};

// A degenerate constraint admits no usable solution branch.
class NoBranchError : public Error {
public:
    NoBranchError(const std::string& msg, int constraint_index)
        : Error("no-branch", msg), constraint_(constraint_index) {}
    int constraint_index() const noexcept { return constraint_; }

private:
    int constraint_;
};

} // namespace daestab
