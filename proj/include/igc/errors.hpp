#pragma once

#include <stdexcept>
#include <string>

namespace igc {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension or layout mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (indivisible channel counts, bad widths, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numeric collapse requested on a composition that does not support it.
class CompositionError : public Error {
 public:
  using Error::Error;
};

// A constructed block violates the complementary condition.
class ComplementarityError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API contract (stale cache, mismatched param/grad sets).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(long long epoch, const std::string& msg)
      : Error("epoch " + std::to_string(epoch) + ": " + msg), epoch_(epoch) {}
  long long epoch() const { return epoch_; }

 private:
  long long epoch_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace igc
