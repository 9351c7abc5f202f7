#pragma once

#include <stdexcept>
#include <string>

namespace conespectra {

// Domain error types. Construction of models never throws; operations that
// need a precondition throw one of these.

struct NoM1StarWitness : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PermutationLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidZ : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Degenerate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpecModelMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SupportViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDepth : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DepthInsufficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInterval : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(msg), line(line), column(column) {}
    int line;
    int column;
};

}  // namespace conespectra
