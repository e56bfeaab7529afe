#pragma once

#include <stdexcept>
#include <string>

namespace ppmine {

enum class ErrorCategory {
  usage,   // bad arguments or parameter values
  io,      // file open/read/write failure
  format,  // malformed input file contents
  config,  // inconsistent configuration
  data,    // inputs violate a documented precondition
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
  }
  return "unknown";
}

// Library errors carry a category so the CLI can emit a single
// machine-parsable line: "error:<category>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace ppmine
