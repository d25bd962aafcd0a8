#pragma once

#include <stdexcept>
#include <string>

namespace dknn {

enum class ErrorKind {
  Dimension,        // shape or length mismatch
  InvalidArgument,  // value outside its documented domain
  Io,               // file missing or unreadable
  Corrupt,          // on-disk artifact fails magic/version/length checks
  Inconsistent,     // artifacts from different model generations
  NonFinite,        // NaN/Inf produced during numeric work
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace dknn
