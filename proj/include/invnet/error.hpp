#pragma once

#include <stdexcept>
#include <string>

namespace invnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension mismatch or invalid geometry.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Singular or numerically non-invertible matrix.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration; carries a line number when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(format(what, line)), line_(line) {}

    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& what, int line) {
        if (line > 0) {
            return "line " + std::to_string(line) + ": " + what;
        }
        return what;
    }

    int line_ = 0;
};

/// File parsing or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace invnet
