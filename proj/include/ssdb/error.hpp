#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssdb {

enum class ErrorCode {
  Usage,
  DivisionByZero,
  InsufficientShares,
  TypeMismatch,
  Syntax,
  // Wire-visible codes (carried in ERROR frames).
  UnknownType,
  Malformed,
  ValueRange,
  NoSuchTable,
  NoSuchAttr,
  SchemaMismatch,
  ThresholdUnavailable,
  Unavailable,
  BadRequest,
  QueryTimeout,
  DataCorruption,
  Internal,
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage: return "USAGE";
    case ErrorCode::DivisionByZero: return "DIVISION_BY_ZERO";
    case ErrorCode::InsufficientShares: return "INSUFFICIENT_SHARES";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::Syntax: return "SYNTAX";
    case ErrorCode::UnknownType: return "UNKNOWN_TYPE";
    case ErrorCode::Malformed: return "MALFORMED";
    case ErrorCode::ValueRange: return "VALUE_RANGE";
    case ErrorCode::NoSuchTable: return "NO_SUCH_TABLE";
    case ErrorCode::NoSuchAttr: return "NO_SUCH_ATTR";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::ThresholdUnavailable: return "THRESHOLD_UNAVAILABLE";
    case ErrorCode::Unavailable: return "UNAVAILABLE";
    case ErrorCode::BadRequest: return "BAD_REQUEST";
    case ErrorCode::QueryTimeout: return "QUERY_TIMEOUT";
    case ErrorCode::DataCorruption: return "DATA_CORRUPTION";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "INTERNAL";
}

inline ErrorCode code_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Internal); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (code_name(code) == name) return code;
  }
  return ErrorCode::Internal;
}

/// Every failure in the library surfaces as an Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(code_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline void ensure(bool cond, ErrorCode code, const std::string& detail) {
  if (!cond) throw Error(code, detail);
}

}  // namespace ssdb
