#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochchain {

enum class ErrorCode {
  NegativeEntry,
  RowSumOutOfTolerance,
  DimensionMismatch,
  DimensionTooLarge,
  DimensionTooLargeForCutEnumeration,
  TrivialSubset,
  NotDeterministic,
  InfeasibleBound,
  NoConvergence,
  NotAFixedVector,
  OutOfRange,
  InvalidArgument,
  Parse,
  Validation,
};

const char* to_string(ErrorCode code);

// Carries the offending indices/value where the error has them
// (row/col for matrix validation, line for parse errors).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t index = 0,
        std::size_t index2 = 0, double value = 0.0)
      : std::runtime_error(what),
        code_(code),
        index_(index),
        index2_(index2),
        value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t index() const noexcept { return index_; }
  std::size_t index2() const noexcept { return index2_; }
  double value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::size_t index_;
  std::size_t index2_;
  double value_;
};

}  // namespace stochchain
