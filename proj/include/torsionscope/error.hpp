#pragma once

#include <stdexcept>
#include <string>

namespace torsionscope {

enum class ErrorCode {
  InvalidArgument = 1,
  Precondition = 2,
  CapacityExceeded = 3,
  NumericFailure = 4,
  Io = 5,
  Internal = 6,
};

/// Every failure raised by the core library carries one of these codes; the
/// C API maps them onto ts_status values one to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace torsionscope
