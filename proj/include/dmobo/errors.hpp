#pragma once

#include <stdexcept>
#include <string>

namespace dmobo {

// Shape or membership mismatch between related inputs (lengths, spaces).
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An indicator was requested on inputs for which it has no value.
struct UndefinedIndicatorError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedDimensionError : std::domain_error {
  using std::domain_error::domain_error;
};

struct CannotFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CannotTrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment / problem / optimizer configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace dmobo
