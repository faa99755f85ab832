#pragma once

#include <stdexcept>
#include <string>

namespace gsbl {

/// Bad sizes, shapes or parameter values passed to a builder or routine.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A density was evaluated outside its support (non-positive precision, x <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The precision F^T A F + R^T B R is not positive definite, i.e. the
/// forward and regularization operators share a nontrivial kernel.
class IllPosedModel : public std::runtime_error {
 public:
  explicit IllPosedModel(const std::string& what)
      : std::runtime_error(what + " (common kernel condition ker(F) ∩ ker(R) = {0} violated?)") {}
};

/// R^T B R is singular, so the conditionally Gaussian prior is improper and
/// the marginal likelihood does not exist.
class ImproperPrior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dense-only routine was asked to handle a problem above its size cap.
class UnsupportedSize : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid experiment configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace gsbl
