#pragma once

#include <stdexcept>
#include <string>

namespace andersonlab {

// Invalid experiment description (bad config file, invalid field values).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown at run time (solver non-convergence, window underflow,
// dense-solver cap exceeded).  The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace andersonlab
