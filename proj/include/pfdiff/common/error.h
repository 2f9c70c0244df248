#pragma once

#include <stdexcept>
#include <string>

namespace pfdiff {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed input that violates a model invariant (missing slack bus, inverted bounds, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Dimension or shape mismatch between collaborating objects.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure: divergence, singular systems, NaN losses.
class NumericError : public Error {
  public:
    using Error::Error;
};

/// Newton-Raphson ran out of iterations. Carries the last mismatch norm.
class DivergedError : public NumericError {
  public:
    DivergedError(const std::string& what, double last_mismatch)
        : NumericError(what), last_mismatch_(last_mismatch) {}
    double last_mismatch() const { return last_mismatch_; }

  private:
    double last_mismatch_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace pfdiff
