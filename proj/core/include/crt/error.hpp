#pragma once

#include <stdexcept>
#include <string>

namespace crt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDesignError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

class SingularCovarianceError : public Error {
 public:
  SingularCovarianceError(int tier, double condition);
  int tier() const noexcept { return tier_; }
  double condition() const noexcept { return condition_; }

 private:
  int tier_;
  double condition_;
};

/// Raised when a rejection sampler exceeds its consecutive-rejection budget.
class SamplerStallError : public Error {
 public:
  SamplerStallError(const std::string& what, long long tries, long long accepted);
  long long tries() const noexcept { return tries_; }
  long long accepted() const noexcept { return accepted_; }
  double acceptance_rate() const noexcept;

 private:
  long long tries_;
  long long accepted_;
};

class InsufficientDrawsError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(int column);
  int column() const noexcept { return column_; }

 private:
  int column_;
};

class EmptyArmError : public Error {
 public:
  using Error::Error;
};

class AllStrataDroppedError : public Error {
 public:
  using Error::Error;
};

class CountMismatchError : public Error {
 public:
  using Error::Error;
};

class TooLargeError : public Error {
 public:
  using Error::Error;
};

class ZeroRangeError : public Error {
 public:
  using Error::Error;
};

class AllPrunedError : public Error {
 public:
  using Error::Error;
};

/// Too many Monte Carlo draws failed statistic evaluation.
class DrawFailureError : public Error {
 public:
  DrawFailureError(long long failed, long long attempted);
  long long failed() const noexcept { return failed_; }
  long long attempted() const noexcept { return attempted_; }

 private:
  long long failed_;
  long long attempted_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace crt
