#pragma once

#include <stdexcept>
#include <string>

namespace tensorrank {

// Invalid model spec, pipeline config or infeasible sampling request.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain (negative Poisson rate, log of xi <= 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A moment table lacks an entry that a computation depends on.
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite intermediate results.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tensorrank
