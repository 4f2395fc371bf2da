#pragma once

#include <stdexcept>
#include <string>

namespace kcel {

enum class ErrorKind {
  InvalidArgument,
  IllConditionedCell,
  HashMismatch,
  VersionMismatch,
  CorruptFile,
  CostGuard,
  NonFiniteState,
  CflViolation,
  EigenFailure,
  ZeroDensity,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using InvalidArgument = KindedError<ErrorKind::InvalidArgument>;
using IllConditionedCell = KindedError<ErrorKind::IllConditionedCell>;
using HashMismatch = KindedError<ErrorKind::HashMismatch>;
using VersionMismatch = KindedError<ErrorKind::VersionMismatch>;
using CorruptFile = KindedError<ErrorKind::CorruptFile>;
using CostGuard = KindedError<ErrorKind::CostGuard>;
using NonFiniteState = KindedError<ErrorKind::NonFiniteState>;
using CflViolation = KindedError<ErrorKind::CflViolation>;
using EigenFailure = KindedError<ErrorKind::EigenFailure>;
using ZeroDensity = KindedError<ErrorKind::ZeroDensity>;
using ConfigError = KindedError<ErrorKind::ConfigError>;
using IoError = KindedError<ErrorKind::IoError>;

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IllConditionedCell: return "IllConditionedCell";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::CostGuard: return "CostGuard";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::CflViolation: return "CflViolation";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::ZeroDensity: return "ZeroDensity";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace kcel
