#pragma once

#include <stdexcept>
#include <string>

namespace bbs {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or flag combinations (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A value does not fit the requested bit width.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed byte stream, container, or corrupt metadata.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Mismatched tensor lengths.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// File system failures (missing files, short reads).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace bbs
