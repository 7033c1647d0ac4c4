#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace decest {

/// Raised when a map is evaluated outside its domain (e.g. Log near a
/// rotation of pi, or on an element that carries a nonzero time offset).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operands belong to different groups.
class DescriptorMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Singular innovation covariance, failed Cholesky, and friends.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An RMI does not start where the receiving state expects it to.
class SpanMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration validation failure. Carries every offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> fields)
      : std::runtime_error(join(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string out = "invalid configuration:";
    for (const auto& f : fields) out += "\n  " + f;
    return out;
  }

  std::vector<std::string> fields_;
};

}  // namespace decest
