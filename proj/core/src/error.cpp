#include "ergolab/error.hpp"

namespace ergolab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::space_mismatch: return "space-mismatch";
    case ErrorCode::unsupported_system: return "unsupported-system";
    case ErrorCode::unsupported_set: return "unsupported-set";
    case ErrorCode::precondition_violation: return "precondition-violation";
    case ErrorCode::resource: return "resource";
    case ErrorCode::no_divergence: return "no-divergence";
    case ErrorCode::construction_failure: return "construction-failure";
    case ErrorCode::audit_failure: return "audit-failure";
    case ErrorCode::requires_simple: return "requires-simple-function";
    case ErrorCode::schema: return "schema";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ergolab
