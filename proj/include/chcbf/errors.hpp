#pragma once

#include <stdexcept>
#include <string>

namespace chcbf {

/// Index or mode count outside the retained basis.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Negative fractional power applied to a field with a nonzero mean mode.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller combined arguments that do not belong together (e.g. a nutrient
/// increment applied to a velocity field, or logs on different time grids).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A potential, noise model or parameter set failed its admissibility checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration. `field` names the offending
/// `section.key`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace chcbf
