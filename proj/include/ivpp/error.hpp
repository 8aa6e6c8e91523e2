#pragma once

#include <stdexcept>
#include <string>

namespace ivpp {

// Broad failure categories; the CLI maps each to a distinct exit code.
enum class ErrorKind {
  invalid_argument = 2,
  io = 3,
  format = 4,
  precondition = 5,
  numeric = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

const char* error_kind_name(ErrorKind kind);

}  // namespace ivpp
