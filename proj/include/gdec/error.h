/*!
 * \file gdec/error.h
 * \brief Error taxonomy shared by all components.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdec {

enum class ErrorCode {
  kParseError,            // malformed input file or wire payload
  kValidationError,       // structurally parsed but violates an invariant
  kLengthMismatch,        // mask/vector size disagreement
  kSyntaxError,           // regex or grammar source rejected
  kUnsupportedFeature,    // regex feature outside the supported subset
  kUndefinedRule,         // grammar references a rule that does not exist
  kLeftRecursion,         // left-recursive grammar (direct or via a cycle)
  kUnsupportedSchema,     // JSON-schema feature outside the supported subset
  kGrammarTooAmbiguous,   // live parser configurations exceeded the bound
  kIllegalToken,          // advance() called with a token the mask forbids
  kDeadEnd,               // no legal continuation and EOS disallowed
  kNotEnoughExemplars,    // fewer exemplar samples than requested turns
  kDatasetError,          // eval dataset unreadable or malformed
  kTimeout,               // HTTP request timed out / transport failure
  kHttpError,             // non-2xx HTTP response
  kSchemaRejected,        // server refused the structured-output payload
  kIoError,               // filesystem failure
  kInternal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorCode::kParseError, m) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error(ErrorCode::kValidationError, m) {}
};

class LengthMismatchError : public Error {
 public:
  explicit LengthMismatchError(const std::string& m) : Error(ErrorCode::kLengthMismatch, m) {}
};

class SyntaxError : public Error {
 public:
  explicit SyntaxError(const std::string& m) : Error(ErrorCode::kSyntaxError, m) {}
};

class UnsupportedFeatureError : public Error {
 public:
  explicit UnsupportedFeatureError(const std::string& m)
      : Error(ErrorCode::kUnsupportedFeature, m) {}
};

class UndefinedRuleError : public Error {
 public:
  explicit UndefinedRuleError(const std::string& m) : Error(ErrorCode::kUndefinedRule, m) {}
};

class LeftRecursionError : public Error {
 public:
  explicit LeftRecursionError(const std::string& m) : Error(ErrorCode::kLeftRecursion, m) {}
};

class UnsupportedSchemaError : public Error {
 public:
  explicit UnsupportedSchemaError(const std::string& m)
      : Error(ErrorCode::kUnsupportedSchema, m) {}
};

class GrammarTooAmbiguousError : public Error {
 public:
  explicit GrammarTooAmbiguousError(const std::string& m)
      : Error(ErrorCode::kGrammarTooAmbiguous, m) {}
};

class IllegalTokenError : public Error {
 public:
  explicit IllegalTokenError(const std::string& m) : Error(ErrorCode::kIllegalToken, m) {}
};

/// Raised when a constraint state has an all-zero mask. Carries the prefix
/// emitted so far so callers can report exactly where decoding got stuck.
class DeadEndError : public Error {
 public:
  DeadEndError(const std::string& m, std::vector<int32_t> prefix_tokens, std::string prefix_text)
      : Error(ErrorCode::kDeadEnd, m),
        prefix_tokens(std::move(prefix_tokens)),
        prefix_text(std::move(prefix_text)) {}

  std::vector<int32_t> prefix_tokens;
  std::string prefix_text;
};

class NotEnoughExemplarsError : public Error {
 public:
  explicit NotEnoughExemplarsError(const std::string& m)
      : Error(ErrorCode::kNotEnoughExemplars, m) {}
};

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& m) : Error(ErrorCode::kDatasetError, m) {}
};

class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& m) : Error(ErrorCode::kTimeout, m) {}
};

/// Non-2xx HTTP response. status == 0 means the transport failed before a
/// status line was received (refused connection, DNS failure, ...).
class HttpError : public Error {
 public:
  HttpError(const std::string& m, int status, std::string body)
      : Error(ErrorCode::kHttpError, m), status(status), body(std::move(body)) {}

  int status;
  std::string body;
};

class SchemaRejectedError : public Error {
 public:
  SchemaRejectedError(const std::string& m, std::string body)
      : Error(ErrorCode::kSchemaRejected, m), body(std::move(body)) {}

  std::string body;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::kIoError, m) {}
};

}  // namespace gdec
