#pragma once

#include <stdexcept>
#include <string>

namespace gpawp {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// validation/contract failures -> 2, training failures -> 3, I/O -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& msg, std::size_t index)
      : Error(msg + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class EmptyReadoutError : public Error {
 public:
  using Error::Error;
};

class MissingClassError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class TaskError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& msg, std::size_t epoch)
      : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpawp
