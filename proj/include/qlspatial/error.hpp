#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qlspatial {

/// Base class for domain failures. Precondition violations on arguments use
/// std::invalid_argument / std::out_of_range instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data failed validation (malformed grid file, non-binary values, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to be symmetric positive definite is not.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, std::ptrdiff_t pivot_index, double pivot_value)
      : Error(what), pivot_index_(pivot_index), pivot_value_(pivot_value) {}

  std::ptrdiff_t pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  std::ptrdiff_t pivot_index_;
  double pivot_value_;
};

/// A requested binary correlation is outside what the margins allow.
class InfeasibleCorrelation : public Error {
 public:
  InfeasibleCorrelation(const std::string& what, double lower, double upper)
      : Error(what), lower_(lower), upper_(upper) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

}  // namespace qlspatial
