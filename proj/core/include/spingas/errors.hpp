#pragma once

#include <stdexcept>
#include <string>

namespace spingas {

/// Thrown when a caller violates an operation's documented precondition
/// (bad index, self-interaction, mismatched dimensions, invalid parameter).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a request exceeds a memory-bound cap (subsystem or
/// brute-force size).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Thrown when a density matrix or channel output is not a valid quantum
/// state within tolerance.
class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problems; `field()` holds the dotted path of the offending
/// entry, e.g. "lattice.probes.speed".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)),
        message_(message) {}

  const std::string& field() const noexcept { return field_; }
  /// The message without the field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

}  // namespace spingas
