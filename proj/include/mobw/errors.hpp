#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mobw {

// Argument outside the support of a density or function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid parameters, datasets or configurations.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Mode search for a log-concave density could not find a finite maximum.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form Bayes factor requested with hyperparameters for which the
// shared shape integral does not cancel.
class HyperMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fewer Monte Carlo draws than an interval at the requested level needs.
class InsufficientSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Too many failed replications in a Monte Carlo study.
class StudyFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mobw
