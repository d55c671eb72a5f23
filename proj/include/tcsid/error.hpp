#pragma once

#include <stdexcept>
#include <string>

namespace tcsid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV cells, ragged rows, empty files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments was violated (shape mismatch, out-of-range parameter).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a meaningful answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InvalidArgument(message);
    }
}

} // namespace detail
} // namespace tcsid
