#pragma once

#include <stdexcept>
#include <string>

namespace mect {

enum class ErrorKind {
  Dimension,  // tensor shapes disagree
  Config,     // bad configuration value or key
  Parse,      // malformed input file
  Contract,   // caller violated a precondition
  Capacity,   // input exceeds a configured bound (max_len)
  Io,         // file system failure
  Numeric,    // non-finite value where a finite one is required
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

}  // namespace mect
