#include "cobra/error.h"

#include <utility>

namespace cobra {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDanglingAnnotation: return "DanglingAnnotation";
    case ErrorCode::kTurnNotFound: return "TurnNotFound";
    case ErrorCode::kNotAQaPair: return "NotAQaPair";
    case ErrorCode::kDialogueNotFound: return "DialogueNotFound";
    case ErrorCode::kMissingAnnotation: return "MissingAnnotation";
    case ErrorCode::kDuplicateAnnotation: return "DuplicateAnnotation";
    case ErrorCode::kEmptySeries: return "EmptySeries";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kDegenerateAgreement: return "DegenerateAgreement";
    case ErrorCode::kBadShape: return "BadShape";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kSeparation: return "Separation";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNoSharedItems: return "NoSharedItems";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kNoJsonFound: return "NoJsonFound";
    case ErrorCode::kFieldMissing: return "FieldMissing";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kEndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::kTransient: return "Transient";
    case ErrorCode::kRequestRejected: return "RequestRejected";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kRunNotFound: return "RunNotFound";
    case ErrorCode::kOutOfOrder: return "OutOfOrder";
    case ErrorCode::kSessionComplete: return "SessionComplete";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::string detail)
    : std::runtime_error(std::move(message)),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace cobra
