#pragma once

#include <stdexcept>
#include <string>

namespace mss {

// Bad arguments, shape mismatches, out-of-range priors.
class InvalidInputError : public std::invalid_argument {
public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Exact-mode oracle asked to enumerate beyond its cap.
class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A solver or factorization broke down (non-finite values, empty spectrum, ...).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed data files.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration keys/values on the CLI surface.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mss
