#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tagrec {

// Bad caller input: violated preconditions, malformed flags, inconsistent
// arguments. Maps to CLI exit code 1.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad or inconsistent data on disk or between artifacts. Exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary/JSON artifact that does not follow its declared format.
class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

// Shapes that disagree between two otherwise valid artifacts.
class DimensionError : public DataError {
public:
    using DataError::DataError;
};

// NaN/Inf showing up in parameters or activations. Exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tagrec
