#pragma once

#include <stdexcept>
#include <string>

namespace binpick {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene could not be laid out inside the container walls.
class PlacementError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in a state its contract forbids.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A grasp strategy cannot produce candidates for this segment; callers fall
/// through to the next strategy.
class StrategyInvalid : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LogParseError : public Error {
 public:
  LogParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace binpick
