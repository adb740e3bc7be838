#pragma once

// Error hierarchy shared by the whole library. Everything derives from
// statfrob::Error so callers can catch one base type; the CLI maps the
// subtypes onto its exit-code contract.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace statfrob {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- construction / shape errors ------------------------------------------

struct DimensionMismatch : Error {
    using Error::Error;
};

// Input tensor asymmetric beyond the allowed relative tolerance.
struct SymmetryError : Error {
    using Error::Error;
};

// Symmetric factorization hit a non-positive pivot.
struct NotSpd : Error {
    using Error::Error;
};

// -- expression layer ------------------------------------------------------

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

struct SyntaxError : ParseError {
    using ParseError::ParseError;
};

struct UnknownVariable : ParseError {
    using ParseError::ParseError;
};

struct UnknownFunction : ParseError {
    using ParseError::ParseError;
};

// Evaluation left the function's domain (log of non-positive, division by
// zero, coth at zero, ...). Carries the offending subexpression in printed
// form.
struct DomainError : Error {
    DomainError(const std::string& msg, std::string subexpression)
        : Error(msg + " in '" + subexpression + "'"),
          subexpr(std::move(subexpression)) {}
    std::string subexpr;
};

// -- pointwise tensor algebra ---------------------------------------------

struct DegeneratePlane : Error {
    using Error::Error;
};

struct NotAssociative : Error {
    using Error::Error;
};

struct NotCommuting : Error {
    using Error::Error;
};

// Some lambda_i is (numerically) zero where a nonzero one is required.
struct DegenerateOperator : Error {
    using Error::Error;
};

struct DiscriminantNegative : Error {
    DiscriminantNegative(const std::string& msg, int failing_index)
        : Error(msg), index(failing_index) {}
    int index;
};

struct MaximizationFailed : Error {
    using Error::Error;
};

// The measured sectional curvature contradicts the value a caller claimed.
struct NotConstantCurvature : Error {
    using Error::Error;
};

// -- charts and probability families --------------------------------------

struct NotSpdAtPoint : NotSpd {
    using NotSpd::NotSpd;
};

struct NotNormalized : Error {
    using Error::Error;
};

struct NonPositiveProbability : Error {
    using Error::Error;
};

struct SingularFisher : Error {
    using Error::Error;
};

// -- WDVV / BC_n -----------------------------------------------------------

struct SingularB : Error {
    using Error::Error;
};

// A coth argument came within the pole margin; `which` names it.
struct SingularPoint : Error {
    SingularPoint(const std::string& msg, std::string argument)
        : Error(msg + ": " + argument), which(std::move(argument)) {}
    std::string which;
};

// -- CLI / configuration ---------------------------------------------------

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace statfrob
