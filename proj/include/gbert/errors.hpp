#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gbert {

/// Tensor extents or argument shapes disagree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, corpora, checkpoints).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;

    DataError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what) {}
};

/// Non-finite values or a failed numerical verification.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gbert
