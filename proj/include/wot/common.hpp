#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace wot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (carries the 1-based line number when known).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input that parses but violates a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical degeneracy (zero mean vector, single-class training set, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Warnings go to stderr unless silenced; tests and the CLI's --quiet flag
// silence them.
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);
bool warnings_enabled();

}  // namespace wot
