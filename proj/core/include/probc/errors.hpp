#ifndef PROBC_ERRORS_HPP
#define PROBC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace probc {

// Error taxonomy shared by the whole pipeline. The CLI maps these onto
// exit codes: validation 2, transformation 3, runtime 4.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- validation ---
struct SyntaxError : Error {
    int line = 0, column = 0;
    SyntaxError(const std::string& msg, int line_, int col_)
        : Error(msg), line(line_), column(col_) {}
};
struct UnknownPrimitive : SyntaxError {
    using SyntaxError::SyntaxError;
};
struct TypeError : Error {
    std::string path;  // child-index path to the offending subterm
    TypeError(const std::string& msg, std::string path_ = {})
        : Error(msg), path(std::move(path_)) {}
};
struct UnboundVariable : TypeError {
    using TypeError::TypeError;
};
struct ValidationError : Error {
    using Error::Error;
};

// --- transformation ---
struct TransformError : Error {
    using Error::Error;
};
struct Unsupported : TransformError {
    using TransformError::TransformError;
};
struct Unhandled : TransformError {
    using TransformError::TransformError;
};
struct NotInvertible : TransformError {
    using TransformError::TransformError;
};
struct NotPairMeasure : TransformError {
    using TransformError::TransformError;
};
struct ZeroMass : TransformError {
    using TransformError::TransformError;
};

// --- runtime ---
struct RuntimeError : Error {
    using Error::Error;
};
struct EvalError : RuntimeError {
    using RuntimeError::RuntimeError;
};
struct NonMeasure : RuntimeError {
    using RuntimeError::RuntimeError;
};
struct QuadratureFailure : RuntimeError {
    using RuntimeError::RuntimeError;
};
struct ZeroMeasure : RuntimeError {
    using RuntimeError::RuntimeError;
};
struct DegenerateChain : RuntimeError {
    using RuntimeError::RuntimeError;
};

}  // namespace probc

#endif
