#pragma once

#include <stdexcept>
#include <string>

namespace fracwave {

/// A mathematical precondition of the model was violated (bad geometry,
/// out-of-range coefficients, incompatible initial data, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The explicit time stepper produced non-finite or runaway values.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace fracwave
