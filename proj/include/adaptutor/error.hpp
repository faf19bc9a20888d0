#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace adaptutor {

/// Engine failure carrying a stable machine-readable code (e.g. "BankExhausted")
/// plus a JSON detail record naming the offending entity.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  nlohmann::json detail_;
};

namespace errc {
inline constexpr const char* kMalformedDocument = "MalformedDocument";
// profiler
inline constexpr const char* kMissingStyleCoverage = "MissingStyleCoverage";
inline constexpr const char* kDuplicateItemId = "DuplicateItemId";
inline constexpr const char* kBadScaleBounds = "BadScaleBounds";
inline constexpr const char* kMissingResponse = "MissingResponse";
inline constexpr const char* kOutOfRangeResponse = "OutOfRangeResponse";
inline constexpr const char* kUnknownItem = "UnknownItem";
// content
inline constexpr const char* kCyclicPrerequisites = "CyclicPrerequisites";
inline constexpr const char* kMissingVariant = "MissingVariant";
inline constexpr const char* kKeySectionNotMaximal = "KeySectionNotMaximal";
inline constexpr const char* kUncoveredSection = "UncoveredSection";
inline constexpr const char* kDanglingLink = "DanglingLink";
inline constexpr const char* kDuplicateId = "DuplicateId";
inline constexpr const char* kUnknownReference = "UnknownReference";
inline constexpr const char* kInvalidQuestion = "InvalidQuestion";
// expert
inline constexpr const char* kUnknownPredicate = "UnknownPredicate";
inline constexpr const char* kUnknownAction = "UnknownAction";
inline constexpr const char* kEmptyRule = "EmptyRule";
// assessment
inline constexpr const char* kBankExhausted = "BankExhausted";
inline constexpr const char* kInvalidTestSpec = "InvalidTestSpec";
inline constexpr const char* kUnansweredQuestion = "UnansweredQuestion";
inline constexpr const char* kUnknownChoice = "UnknownChoice";
inline constexpr const char* kUnknownQuestion = "UnknownQuestion";
inline constexpr const char* kHintsExceeded = "HintsExceeded";
inline constexpr const char* kOutOfRange = "OutOfRange";
// session
inline constexpr const char* kUnknownPack = "UnknownPack";
inline constexpr const char* kUnknownConcept = "UnknownConcept";
inline constexpr const char* kUnknownTest = "UnknownTest";
inline constexpr const char* kInvalidState = "InvalidState";
inline constexpr const char* kHintBudgetExhausted = "HintBudgetExhausted";
inline constexpr const char* kNoMoreHints = "NoMoreHints";
inline constexpr const char* kReplayDivergence = "ReplayDivergence";
inline constexpr const char* kCorruptRecord = "CorruptRecord";
// service
inline constexpr const char* kUnauthorized = "Unauthorized";
inline constexpr const char* kNotFound = "NotFound";
inline constexpr const char* kInvalidLearnerId = "InvalidLearnerId";
inline constexpr const char* kMethodNotAllowed = "MethodNotAllowed";
}  // namespace errc

}  // namespace adaptutor
