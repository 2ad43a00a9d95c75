#pragma once

#include <stdexcept>
#include <string>

namespace cdrp {

/// Argument outside the mathematical domain of an operation (t <= s, unreachable site, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Lattice or buffer would exceed the configured memory budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value, unknown key or unsupported tag.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Snapshot header does not match the expected magic or version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Snapshot payload is truncated or inconsistent with its header.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistical diagnostic was asked to run on too little data.
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cdrp
