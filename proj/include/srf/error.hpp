#pragma once

#include <stdexcept>
#include <string>

namespace srf {

/// Malformed input file (bad row, bad dimension, duplicate declaration).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected before any work is done.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage was asked to run before the stage producing its input.
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(const std::string& path, const std::string& producer)
      : std::runtime_error("missing upstream artifact '" + path + "'; run stage '" + producer +
                           "' first"),
        producer_(producer) {}
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

}  // namespace srf
