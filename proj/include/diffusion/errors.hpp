#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffusion {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters (workload generation, scenario values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An object does not fit into a cache at all.
class AdmissionError : public Error {
 public:
  using Error::Error;
};

// A scenario that cannot be simulated (detected before the event loop starts).
class ScenarioError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. line() is 1-based; 0 means "not tied to a line".
class ParseError : public Error {
 public:
  ParseError(std::string origin, std::size_t line, const std::string& what)
      : Error(format(origin, line, what)), origin_(std::move(origin)), line_(line) {}

  const std::string& origin() const { return origin_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& origin, std::size_t line, const std::string& what) {
    if (line == 0) return origin + ": " + what;
    return origin + ":" + std::to_string(line) + ": " + what;
  }

  std::string origin_;
  std::size_t line_;
};

}  // namespace diffusion
