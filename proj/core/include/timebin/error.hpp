#pragma once

#include <stdexcept>
#include <string>

namespace timebin {

/// Bad caller input: dimensions, parameters out of range, malformed config.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Well-formed call, but the data it was handed cannot be used
/// (parse failures, quadratures outside the binning range, missing files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical guarantee the library relies on was violated.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

[[noreturn]] void throw_invalid(const std::string& what);

}  // namespace timebin
