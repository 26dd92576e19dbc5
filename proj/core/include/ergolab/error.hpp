#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergolab {

enum class ErrorCode {
  invalid_argument,
  space_mismatch,
  unsupported_system,
  unsupported_set,
  precondition_violation,
  resource,
  no_divergence,
  construction_failure,
  audit_failure,
  requires_simple,
  schema,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ergolab
