#pragma once

#include <stdexcept>
#include <string>

namespace nodeplan {

// Failure classes; the CLI maps each one onto a distinct exit code.
enum class ErrorKind {
  input,    // malformed data, bad arguments, precondition violations
  numeric,  // divergence, non-finite values, exhausted iteration budgets
  io,       // unreadable or unwritable files
  network,  // socket bind/accept failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace nodeplan
