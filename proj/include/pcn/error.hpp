#pragma once

#include <stdexcept>
#include <string>

namespace pcn {

/// Base for all library errors that are not plain argument violations.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a geometric predicate cannot be resolved, e.g. every input
/// point lies on one hyperplane or two points coincide after quantization.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries the 1-based line number of the bad row.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace pcn
