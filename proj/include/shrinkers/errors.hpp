#pragma once

#include <stdexcept>
#include <string>

namespace shrinkers {

/// Raised when r/2 + U approaches zero, where the continuity equation degenerates.
class SingularityError : public std::runtime_error {
public:
  SingularityError(const std::string& what, double r) : std::runtime_error(what), r_(r) {}
  double radius() const noexcept { return r_; }

private:
  double r_;
};

class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class OutOfRangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

class QuadratureFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (violated type invariants).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace shrinkers
