#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ermakov {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The quadratic form is not positive along the requested ray (R^2 <= 0 or psi undefined).
class DegenerateDirection : public Error {
public:
    using Error::Error;
};

/// Expression syntax error; `offset()` is the byte offset into the source text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifier : public ParseError {
public:
    UnknownIdentifier(const std::string& name, std::size_t offset)
        : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Evaluation left the real domain (log of a non-positive value, division by zero, ...).
class EvalDomainError : public Error {
public:
    EvalDomainError(const std::string& what, std::string subexpression)
        : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

/// Model construction failed; `issues()` lists every violation found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "invalid model:";
        for (const auto& s : issues) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> issues_;
};

/// A state sits on (or within the guard distance of) a coordinate axis where the
/// coupling terms f(y/x)/(y x^2), g(x/y)/(x y^2) are singular.
class AxisSingularity : public Error {
public:
    using Error::Error;
};

class NonPositiveRho : public Error {
public:
    using Error::Error;
};

class StepUnderflow : public Error {
public:
    using Error::Error;
};

class NoTurningPoint : public Error {
public:
    using Error::Error;
};

class InconsistentEnergy : public Error {
public:
    using Error::Error;
};

class ForbiddenRegion : public Error {
public:
    using Error::Error;
};

/// The angular radicand I - F(tan theta) - G(cot theta) reached zero; `theta()` is where.
class AngularTurning : public Error {
public:
    AngularTurning(const std::string& what, double theta) : Error(what), theta_(theta) {}
    double theta() const noexcept { return theta_; }

private:
    double theta_;
};

class AlphaVanishes : public Error {
public:
    AlphaVanishes(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

/// phi = alpha/R reached zero: the reconstructed radius is unbounded.
class UnboundedMotion : public Error {
public:
    using Error::Error;
};

}  // namespace ermakov
