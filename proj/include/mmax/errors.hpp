#pragma once

#include <stdexcept>
#include <string>

namespace mmax {

// Dimension disagreement between operands. Always a programming or config bug.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad or missing configuration value. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input file. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or other numerical breakdown. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistic undefined for the given input (e.g. correlation of a constant).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mmax
