#ifndef CCS_ERROR_HPP
#define CCS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ccs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization failure, singular input, or a solver that did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An input that was required to lie in the feasible set does not.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A runtime guarantee of the training loop was broken.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccs

#endif
