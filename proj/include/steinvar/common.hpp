#pragma once

#include <stdexcept>
#include <string>

namespace steinvar {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with user-supplied data (bad file, degenerate design).
class DataError : public Error {
 public:
  using Error::Error;
};

class DataFormatError : public DataError {
 public:
  using DataError::DataError;
};

class RankDeficientError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateResponseError : public DataError {
 public:
  using DataError::DataError;
};

class NonPositiveVarianceError : public Error {
 public:
  using Error::Error;
};

class NotIntegrableError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

class SeriesDivergedError : public Error {
 public:
  using Error::Error;
};

class ZeroResidualError : public Error {
 public:
  using Error::Error;
};

class BadShrinkageOrderError : public Error {
 public:
  using Error::Error;
};

class ParameterRangeViolationError : public Error {
 public:
  using Error::Error;
};

class NonPositiveArgumentError : public Error {
 public:
  using Error::Error;
};

class InconsistentXiError : public Error {
 public:
  using Error::Error;
};

class ChallengerNotPhiFormError : public Error {
 public:
  using Error::Error;
};

class QuadratureBudgetExceededError : public Error {
 public:
  using Error::Error;
};

class DensityNormalizationError : public Error {
 public:
  using Error::Error;
};

}  // namespace steinvar
