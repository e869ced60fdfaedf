#include "duelbench/error.hpp"

namespace duelbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kComplementarityViolation: return "ComplementarityViolation";
    case ErrorCode::kNoCondorcetWinner: return "NoCondorcetWinner";
    case ErrorCode::kInvalidMatrix: return "InvalidMatrix";
    case ErrorCode::kInvalidSchedule: return "InvalidSchedule";
    case ErrorCode::kStepOutOfRange: return "StepOutOfRange";
    case ErrorCode::kArmOutOfRange: return "ArmOutOfRange";
    case ErrorCode::kSingleSegment: return "SingleSegment";
    case ErrorCode::kNonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::kInvalidGap: return "InvalidGap";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kInfeasibleHorizon: return "InfeasibleHorizon";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kTooSmallHorizon: return "TooSmallHorizon";
    case ErrorCode::kConditionViolated: return "ConditionViolated";
    case ErrorCode::kInvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::kIndivisibleHorizon: return "IndivisibleHorizon";
    case ErrorCode::kUnknownAlgorithm: return "UnknownAlgorithm";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace duelbench
