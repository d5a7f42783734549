#pragma once

#include <stdexcept>
#include <string>

namespace vardro {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Negative radius or a budget vector whose length does not match the batch.
class InvalidBudgetError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& message)
      : Error("diverged at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch) + ": " + message),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vardro
