#pragma once

#include <stdexcept>
#include <string>

namespace ftdo {

// Error categories; the CLI maps these one-to-one onto process exit codes.
enum class ErrorCode : int {
  invalid_config = 2,      // schema violations, bad parameters, contract breaks
  disconnected_graph = 3,  // network fails the connectivity requirement
  divergence = 4,          // integration left the admissible state region
  numeric_failure = 5,     // solver did not reach its tolerance
  io_error = 6,            // file read/write problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace ftdo
