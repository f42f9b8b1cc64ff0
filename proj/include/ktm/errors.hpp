#pragma once

#include <stdexcept>
#include <string>

namespace ktm {

enum class ErrorCode {
  invalid_argument,
  dimension,
  numerical,
  io,
  unsupported,
  version_mismatch,
  invalid_state,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace ktm
