#pragma once

#include <stdexcept>
#include <string>

namespace dnefc {

// Error hierarchy. The CLI maps these onto exit codes:
// ValidationError/UsageError -> 2, IoError/FormatError -> 3, InvariantError -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape, dimension or configuration mismatch detected before compute.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller asked for something the operation does not support.
class UsageError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerically degenerate input (zero variance, constant matrix).
class DegenerateInputError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents: bad magic, truncated payload, unparsable cell.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

} // namespace dnefc
