#pragma once

#include <stdexcept>
#include <string>

namespace fimnet {

// Errors caused by malformed or inconsistent input data. The CLI maps these
// to exit code 2.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
  ParseError(const std::string& what, long line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

class UnknownJointError : public DataError {
public:
  explicit UnknownJointError(const std::string& name)
      : DataError("unknown joint name: " + name) {}
};

class DuplicateFrameError : public DataError {
public:
  explicit DuplicateFrameError(long index)
      : DataError("duplicate frame index " + std::to_string(index)) {}
};

class UninterpolatableJointError : public DataError {
public:
  explicit UninterpolatableJointError(const std::string& name)
      : DataError("joint " + name + " observed in fewer than 2 frames") {}
};

class TooShortError : public DataError {
public:
  TooShortError(long frames, long required)
      : DataError("sequence has " + std::to_string(frames) +
                  " frames, need " + std::to_string(required)) {}
};

class DisconnectedGraphError : public DataError {
public:
  using DataError::DataError;
};

// Invalid configuration or flag combinations. Exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric breakdowns. Exit code 3.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace fimnet
