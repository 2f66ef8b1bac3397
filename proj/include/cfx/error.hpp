#ifndef CFX_ERROR_HPP
#define CFX_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, XES, SEM DSL, config). Line/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Structurally valid input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic domain failure while evaluating a structural equation.
class EvalError : public Error {
 public:
  EvalError(const std::string& feature, const std::string& what)
      : Error("evaluating '" + feature + "': " + what), feature_(feature) {}

  const std::string& feature() const noexcept { return feature_; }

 private:
  std::string feature_;
};

/// The observed instance cannot be explained by the SEM (noise out of support,
/// non-solvable equation, missing value).
class AbductionError : public Error {
 public:
  AbductionError(const std::string& feature, const std::string& what)
      : Error("abduction failed for '" + feature + "': " + what), feature_(feature) {}

  const std::string& feature() const noexcept { return feature_; }

 private:
  std::string feature_;
};

/// A predictor failure tagged with the candidate that triggered it.
class CandidateError : public Error {
 public:
  CandidateError(std::size_t index, const std::string& what, bool sem_inconsistency)
      : Error("candidate " + std::to_string(index) + ": " + what),
        index_(index),
        sem_inconsistency_(sem_inconsistency) {}

  std::size_t index() const noexcept { return index_; }
  bool sem_inconsistency() const noexcept { return sem_inconsistency_; }

 private:
  std::size_t index_;
  bool sem_inconsistency_;
};

}  // namespace cfx

#endif  // CFX_ERROR_HPP
