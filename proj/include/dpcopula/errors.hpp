#pragma once

#include <stdexcept>
#include <string>

namespace dpcopula {

/// Invalid user-supplied configuration (budget, schema document, flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that does not conform to its schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed (non-convergence, non-finite input, failed factorization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpcopula
