// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tokenjoule {

/// Base class for all tokenjoule errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or usage (maps to CLI exit code 2).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file or record; carries the 1-based line number when known.
class ParseError : public Error {
  public:
    explicit ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_ = 0;
};

/// Stored checksum does not match recomputed content.
class IntegrityError : public Error {
  public:
    using Error::Error;
};

/// Missing, insufficient, or degenerate data (zero tokens, trace gaps, ...).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// GPU name not present in the catalog, or catalog inconsistency.
class CatalogError : public Error {
  public:
    using Error::Error;
};

/// Power sampler command failed to start or produce usable output.
class SamplerError : public Error {
  public:
    using Error::Error;
};

/// Endpoint unreachable or protocol failure.
class EndpointError : public Error {
  public:
    using Error::Error;
};

/// Persistence conflict (existing experiment, refusing to overwrite).
class StoreError : public Error {
  public:
    using Error::Error;
};

}  // namespace tokenjoule
