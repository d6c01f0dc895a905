#pragma once

#include <stdexcept>
#include <string>

namespace pmcf {

enum class ErrorKind {
  structural,   // grid or shape mismatch
  input,        // a precondition on an argument was violated
  numeric,      // a solver or quadrature did not converge
  search,       // saddle search lost the wall crossing
  config,       // configuration text was rejected
  format,       // field file could not be read
  construction, // a geometric construction failed its own check
  unsupported,  // the operation does not exist in this dimension
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] auto kind() const noexcept -> ErrorKind { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

// Process exit code used by the command line tool.
auto exit_code(ErrorKind kind) noexcept -> int;

}  // namespace pmcf
