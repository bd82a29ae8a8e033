#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ampvbic {

using cd = std::complex<double>;

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Lower bound applied to every posterior variance handed to the AMP module.
inline constexpr double kVarianceFloor = 1e-12;

// Error hierarchy. Everything the library throws derives from Error so the
// CLI can map numerical breakdowns to a dedicated exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveNoise : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroReferenceSymbol : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Base of the errors that signal a numerical breakdown of the iteration.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class NonPositiveScale : public NumericalBreakdown {
 public:
  using NumericalBreakdown::NumericalBreakdown;
};

class PrecisionDegenerate : public NumericalBreakdown {
 public:
  using NumericalBreakdown::NumericalBreakdown;
};

}  // namespace ampvbic
