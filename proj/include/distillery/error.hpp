#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distillery {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  dimension_overflow,
  invalid_state,
  zero_probability,
  not_trace_preserving,
  not_product_form,
  rank_too_large,
  unreachable_target,
  steps_exhausted,
  not_distillable,
  invalid_distribution,
  budget_exceeded,
  parse_error,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::dimension_overflow: return "dimension_overflow";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::zero_probability: return "zero_probability";
    case ErrorCode::not_trace_preserving: return "not_trace_preserving";
    case ErrorCode::not_product_form: return "not_product_form";
    case ErrorCode::rank_too_large: return "rank_too_large";
    case ErrorCode::unreachable_target: return "unreachable_target";
    case ErrorCode::steps_exhausted: return "steps_exhausted";
    case ErrorCode::not_distillable: return "not_distillable";
    case ErrorCode::invalid_distribution: return "invalid_distribution";
    case ErrorCode::budget_exceeded: return "budget_exceeded";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace distillery
