/**
 * @file error.h
 * @brief Exception hierarchy shared by every m2l module.
 */

#ifndef M2L_ERROR_H
#define M2L_ERROR_H

#include <stdexcept>
#include <string>

namespace m2l {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (schema or invariant violation). The message
/// names the offending location, e.g. `phrases[0].notes[2].pitch`.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A value outside the domain an operation is defined on (e.g. a rest pitch
/// handed to melodic_direction, or a neutral tone handed to tone_rank).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a precondition that couples two inputs (length mismatches).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Character or class not present in the loaded tables.
class LookupError : public Error {
 public:
  LookupError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Invalid user configuration (CLI flags, client config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace m2l

#endif  // M2L_ERROR_H
