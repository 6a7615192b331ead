#ifndef GIBBSQ_ERRORS_HPP_
#define GIBBSQ_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gibbsq {

/// Bad input: wrong dimensions, non-finite values, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Loss derivative requested at a kink (x == theta, or a coordinate tie when r < 2).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base for numerical failures the CLI maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDrawsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gibbsq

#endif  // GIBBSQ_ERRORS_HPP_
