#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eod {

// Stable machine-readable error codes. The string form is part of the HTTP
// problem documents and the CLI diagnostics, so values must not be renamed.
enum class ErrorCode {
  invalid_argument,
  invalid_box,
  dimension_mismatch,
  non_finite,
  parse_error,
  reserved_name,
  single_class,
  degenerate_k,
  fold_infeasible,
  not_found,
  state_conflict,
  stale_proposal,
  malformed_label,
  io_error,
  idempotency_conflict,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace eod
