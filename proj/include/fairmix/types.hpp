#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fairmix {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Failure taxonomy. The CLI maps each class onto a distinct exit code;
// plain precondition violations surface as std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing configuration / schema / usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsuitable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Rank deficiency, non-convergence, divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairmix
