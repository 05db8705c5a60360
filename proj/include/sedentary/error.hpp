#pragma once

#include <stdexcept>
#include <string>

namespace sedentary {

// Every error carries a stable short code so the CLI can prefix its
// diagnostics ("E_PARSE: ...") and scripts can match on it.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("E_PARSE", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateSampleError : public Error {
 public:
  explicit DuplicateSampleError(const std::string& what) : Error("E_DUPLICATE", what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("E_DOMAIN", what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error("E_STATE", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("E_CONFIG", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("E_IO", what) {}
};

class DegenerateTestError : public Error {
 public:
  explicit DegenerateTestError(const std::string& what) : Error("E_DEGENERATE", what) {}
};

}  // namespace sedentary
