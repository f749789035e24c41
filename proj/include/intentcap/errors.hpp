#pragma once

#include <stdexcept>
#include <string>

namespace intentcap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A value violates a domain invariant (empty element, bad weights, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file or payload could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Run configuration is unusable. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to a provider. `retryable()` is true for
/// rate limiting and transient server errors.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool retryable, int status = 0)
      : Error(message), retryable_(retryable), status_(status) {}

  bool retryable() const noexcept { return retryable_; }
  int status() const noexcept { return status_; }

 private:
  bool retryable_;
  int status_;
};

/// Replay mode asked for an exchange that is not in the cassette.
class CassetteMiss : public Error {
 public:
  explicit CassetteMiss(const std::string& key)
      : Error("cassette miss for exchange key " + key), key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// An LLM role could not produce a usable artifact after all attempts.
/// Carries the raw text of the last response.
class RoleError : public Error {
 public:
  RoleError(const std::string& role, const std::string& message, std::string raw_response)
      : Error(role + ": " + message), role_(role), raw_(std::move(raw_response)) {}

  const std::string& role() const noexcept { return role_; }
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string role_;
  std::string raw_;
};

}  // namespace intentcap
