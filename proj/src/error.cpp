#include "eod/error.hpp"

namespace eod {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_box: return "invalid_box";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::reserved_name: return "reserved_name";
    case ErrorCode::single_class: return "single_class";
    case ErrorCode::degenerate_k: return "degenerate_k";
    case ErrorCode::fold_infeasible: return "fold_infeasible";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::state_conflict: return "state_conflict";
    case ErrorCode::stale_proposal: return "stale_proposal";
    case ErrorCode::malformed_label: return "malformed_label";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::idempotency_conflict: return "idempotency_conflict";
  }
  return "unknown";
}

}  // namespace eod
