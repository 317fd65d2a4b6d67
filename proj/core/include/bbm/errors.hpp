#pragma once

#include <stdexcept>
#include <string>

namespace bbm {

// Input violates a documented invariant of a domain type.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of an operation.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested item was never recorded (e.g. an undeclared snapshot time).
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Statistic is undefined for the given input (empty population, extinction).
class UndefinedValueError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numerical routine failed to reach its target accuracy.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bbm
