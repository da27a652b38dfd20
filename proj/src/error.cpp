#include "tacmine/error.hpp"

namespace tacmine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "VALIDATION";
    case ErrorCode::kUnparsed: return "UNPARSED";
    case ErrorCode::kStaleVersion: return "STALE_VERSION";
    case ErrorCode::kNoCandidates: return "NO_CANDIDATES";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

}  // namespace tacmine
