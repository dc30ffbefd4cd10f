#pragma once

#include <stdexcept>
#include <string>

#include "lowps/types.hpp"

namespace lowps {

// Values double as process exit codes for the CLI.
enum class ErrorKind {
  io = 1,
  parse = 2,
  precondition = 3,
  convergence = 4,
  cap_exceeded = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::precondition, what) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorKind::convergence, what) {}
};

struct CapExceededError : Error {
  explicit CapExceededError(const std::string& what)
      : Error(ErrorKind::cap_exceeded, what) {}
};

// Formats z as "(re, im)" for error messages.
std::string format_point(Complex z);

}  // namespace lowps
