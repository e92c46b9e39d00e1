#pragma once

#include <stdexcept>
#include <string>

namespace idim {

// Invalid argument values: preconditions, domain violations, bad flags.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Problems with input data or files (missing file, malformed CSV, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A computation could not produce a result (no valid locals, no root, ...).
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace idim
