#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace haptutor {

// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnknownPitchError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::size_t retries)
      : Error(what + " (after " + std::to_string(retries) + " retries)"),
        retries_(retries) {}

  std::size_t retries() const noexcept { return retries_; }

 private:
  std::size_t retries_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class TimeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SessionError : public Error {
 public:
  using Error::Error;
};

}  // namespace haptutor
