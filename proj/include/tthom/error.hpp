#pragma once

#include <stdexcept>
#include <string>

namespace tthom {

// Mismatched core counts, physical dimensions or ranks.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A dense materialization would exceed the configured element cap.
class SizeCapError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Non-finite values or a failed factorization inside a solver.
class SolverBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files or invalid user-supplied parameters.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tthom
