#pragma once

#include <stdexcept>
#include <string>

namespace ltk {

/// Invalid input: malformed files, inconsistent dimensions, violated preconditions.
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Failure of a numerical routine (factorization, degenerate smoother).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ltk
