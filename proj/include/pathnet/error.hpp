#pragma once

#include <stdexcept>
#include <string>

namespace pathnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable, corrupt or inconsistent input data (CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace pathnet
