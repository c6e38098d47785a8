#pragma once

#include <stdexcept>
#include <string>

namespace netwls {

/// Malformed input: bad ids, dimension mismatches, invalid arguments.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure: singular covariance, unidentifiable system, failed solve.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation defined only for scalar node variables was given a vector instance.
class UnsupportedCase : public std::runtime_error {
public:
    explicit UnsupportedCase(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scenario file could not be parsed; message carries line context.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, int line, const std::string& msg)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace netwls
