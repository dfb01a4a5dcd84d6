#pragma once

#include <stdexcept>
#include <string>

namespace corpuskit {

// Maps one-to-one onto the CLI exit codes.
enum class ErrorCategory : int {
  config = 2,
  source = 3,
  store = 4,
  verification = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

/// Input text is not well-formed (bad JSON, bad CSV, bad ID list line).
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Input is well-formed but a required attribute is missing or has the wrong type.
class SchemaError : public ConfigError {
 public:
  SchemaError(const std::string& attribute, const std::string& what)
      : ConfigError(what), attribute_(attribute) {}

  const std::string& attribute() const noexcept { return attribute_; }

 private:
  std::string attribute_;
};

class SourceError : public Error {
 public:
  explicit SourceError(const std::string& what) : Error(ErrorCategory::source, what) {}
};

class StoreError : public Error {
 public:
  StoreError(const std::string& what, bool retriable)
      : Error(ErrorCategory::store, what), retriable_(retriable) {}

  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

class VerificationError : public Error {
 public:
  explicit VerificationError(const std::string& what)
      : Error(ErrorCategory::verification, what) {}
};

}  // namespace corpuskit
