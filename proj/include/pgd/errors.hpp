#pragma once

#include <stdexcept>
#include <string>

namespace pgd {

// Bad numeric input (non-finite values, out-of-range exponents).
struct InputDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Mismatched vector/dataset dimensions.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Classifier does not separate the data (non-positive margin).
struct NotSeparatingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset admits no separating direction.
struct NotSeparableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Synthetic data generation exhausted its retry budget.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace pgd
