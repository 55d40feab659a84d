#include "storesched/error.hpp"

namespace storesched {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDimension: return "NonPositiveDimension";
    case ErrorCode::kEfficiencyOutOfRange: return "EfficiencyOutOfRange";
    case ErrorCode::kCapacityViolation: return "CapacityViolation";
    case ErrorCode::kRateViolation: return "RateViolation";
    case ErrorCode::kOverchargeViolation: return "OverchargeViolation";
    case ErrorCode::kOverserveViolation: return "OverserveViolation";
    case ErrorCode::kNotEquivalent: return "NotEquivalent";
    case ErrorCode::kNotGreedy: return "NotGreedy";
    case ErrorCode::kInfeasibleInput: return "InfeasibleInput";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

std::string Violation::describe() const {
  std::string out = std::string(to_string(code)) + " at step " + std::to_string(step);
  if (store) out += ", store " + std::to_string(*store);
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace storesched
