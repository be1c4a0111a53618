#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace npmle {

enum class ErrorKind { argument, data, parse, io, numeric, construction, training, degenerate_model };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::argument, what) {}
};

// Input values that violate a data invariant (off-simplex vectors, non-finite function values).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class ConstructionError : public Error {
public:
    explicit ConstructionError(const std::string& what) : Error(ErrorKind::construction, what) {}
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::size_t step)
        : Error(ErrorKind::training, "step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class DegenerateModelError : public Error {
public:
    explicit DegenerateModelError(const std::string& what) : Error(ErrorKind::degenerate_model, what) {}
};

// CLI exit status: 2 for bad arguments or unreadable inputs, 3 for numeric and construction failures.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::argument:
    case ErrorKind::parse:
    case ErrorKind::io:
        return 2;
    default:
        return 3;
    }
}

} // namespace npmle
