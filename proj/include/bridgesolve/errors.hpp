#pragma once

#include <stdexcept>
#include <string>

namespace bridgesolve {

/// Argument outside the valid range of a schedule or step function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation of a bridge score at t = T, where its denominator vanishes.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid solver, grid or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested Taylor order whose exponential integral has no elementary
/// antiderivative.
class UnsupportedOrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical oracle failed to reach its tolerance.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bridgesolve
