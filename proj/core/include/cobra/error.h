#ifndef COBRA_ERROR_H_
#define COBRA_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cobra {

// Every domain failure carries one of these codes. The service maps them onto
// HTTP statuses and the CLI onto exit code 1.
enum class ErrorCode {
  kMalformedFile,
  kSchemaViolation,
  kDanglingAnnotation,
  kTurnNotFound,
  kNotAQaPair,
  kDialogueNotFound,
  kMissingAnnotation,
  kDuplicateAnnotation,
  kEmptySeries,
  kLengthMismatch,
  kTooFewSamples,
  kZeroVariance,
  kDegenerateAgreement,
  kBadShape,
  kOneClassOnly,
  kSeparation,
  kRankDeficient,
  kNoSharedItems,
  kNoOverlap,
  kNoJsonFound,
  kFieldMissing,
  kOutOfRange,
  kAuthFailure,
  kEndpointUnreachable,
  kTransient,
  kRequestRejected,
  kSessionNotFound,
  kRunNotFound,
  kOutOfOrder,
  kSessionComplete,
  kInsufficientData,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {});

  ErrorCode code() const { return code_; }
  // Field, record, or turn the error refers to; empty when not applicable.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cobra

#endif  // COBRA_ERROR_H_
