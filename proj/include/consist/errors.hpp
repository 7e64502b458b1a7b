#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace consist {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rule broken by a candidate comparison matrix.
struct Violation {
  enum class Rule {
    size,
    non_finite,
    negative,
    diagonal,
    asymmetric_missing,
    reciprocity,
    labels,
    disconnected,
  };

  Rule rule;
  std::size_t a = 0;
  std::size_t b = 0;
  std::string message;
};

const char* rule_name(Violation::Rule rule);

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Raised when spectral work is requested on a disconnected comparison graph.
class DisconnectedError : public Error {
 public:
  explicit DisconnectedError(std::vector<std::vector<std::size_t>> components);

  const std::vector<std::vector<std::size_t>>& components() const noexcept {
    return components_;
  }

 private:
  std::vector<std::vector<std::size_t>> components_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Simple-path enumeration hit its budget.
class PathBudgetError : public Error {
 public:
  using Error::Error;
};

/// CI and HCI need every comparison.
class IncompleteMatrixError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace consist
