#pragma once

#include <stdexcept>
#include <string>

namespace otgraph {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Required input data is missing (e.g. curve parameters on a point cloud).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input geometry for which the requested quantity is undefined.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Graph structure rules out the operation (isolated nodes, disconnected graph).
class GraphError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace otgraph
